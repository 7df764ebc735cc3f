#include <atomic>
#include <cstdlib>
#include <string>

#include "ffcac/simd/kernels.hpp"

namespace ffcac::simd {

namespace detail {
#if defined(FFCAC_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(FFCAC_HAVE_NEON)
const KernelTable& neon_table();
#endif
}  // namespace detail

const KernelTable* avx2_kernels() {
#if defined(FFCAC_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &detail::avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable* neon_kernels() {
#if defined(FFCAC_HAVE_NEON)
  return &detail::neon_table();
#else
  return nullptr;
#endif
}

std::vector<const KernelTable*> available_kernels() {
  std::vector<const KernelTable*> out{&scalar_kernels()};
  if (auto* t = avx2_kernels()) out.push_back(t);
  if (auto* t = neon_kernels()) out.push_back(t);
  return out;
}

namespace {

const KernelTable* best() {
  if (auto* t = avx2_kernels()) return t;
  if (auto* t = neon_kernels()) return t;
  return &scalar_kernels();
}

const KernelTable* by_name(std::string_view name) {
  if (name == "auto") return best();
  for (auto* t : available_kernels())
    if (std::string_view(t->name) == name) return t;
  return nullptr;
}

const KernelTable* initial() {
  if (const char* env = std::getenv("FFCAC_SIMD")) {
    if (auto* t = by_name(env)) return t;
  }
  return best();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> s{initial()};
  return s;
}

}  // namespace

const KernelTable& active() { return *slot().load(std::memory_order_relaxed); }

bool select(std::string_view name) {
  auto* t = by_name(name);
  if (!t) return false;
  slot().store(t, std::memory_order_relaxed);
  return true;
}

}  // namespace ffcac::simd
