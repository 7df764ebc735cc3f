#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ffcac/tensor.hpp"

// MEEW1 weight container. Layout (all integers and floats little-endian):
//
//   magic         5 bytes  "MEEW1"
//   tensor_count  u64
//   tensor_count records:
//     name_len    u32, then name_len bytes of UTF-8
//     rank        u32
//     extents     rank x u64
//     dtype       u8   (0 = f32, 1 = f64)
//     values      product(extents) x 4 or 8 bytes, row-major
//   label_count   u64
//   label_count records:
//     len u32, then len bytes of UTF-8
//
// The label section is empty for encoder weights and holds the class registry
// (in index order) for classifier state. docs/weight_container.md has a worked
// byte-level example.
namespace ffcac::io {

enum class DType : std::uint8_t { kF32 = 0, kF64 = 1 };

struct NamedTensor {
  std::string name;
  Tensor value;
  DType dtype = DType::kF32;
};

struct Container {
  std::vector<NamedTensor> tensors;
  std::vector<std::string> labels;

  const NamedTensor* find(const std::string& name) const;
};

inline constexpr char kMagic[5] = {'M', 'E', 'E', 'W', '1'};

std::vector<std::uint8_t> encode(const Container& container);
// Throws LoadError (bad magic, truncated file, bad dtype).
Container decode(std::span<const std::uint8_t> bytes);

void write_file(const Container& container, const std::filesystem::path& path);
Container read_file(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);

}  // namespace ffcac::io
