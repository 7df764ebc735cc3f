#include "ffcac/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "ffcac/error.hpp"

namespace ffcac::io {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  void need(std::size_t n, const char* what) const {
    if (in_.size() - pos_ < n) {
      throw LoadError(LoadFailure::kTruncated,
                      std::string("unexpected end of data while reading ") + what);
    }
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return in_[pos_++];
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  std::string str(const char* what) {
    const std::uint32_t n = u32(what);
    need(n, what);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

const NamedTensor* Container::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

std::vector<std::uint8_t> encode(const Container& container) {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.u64(container.tensors.size());
  for (const auto& t : container.tensors) {
    w.str(t.name);
    w.u32(static_cast<std::uint32_t>(t.value.rank()));
    for (auto e : t.value.shape()) w.u64(e);
    w.u8(static_cast<std::uint8_t>(t.dtype));
    for (double v : t.value.values()) {
      if (t.dtype == DType::kF32) {
        w.u32(std::bit_cast<std::uint32_t>(static_cast<float>(v)));
      } else {
        w.u64(std::bit_cast<std::uint64_t>(v));
      }
    }
  }
  w.u64(container.labels.size());
  for (const auto& l : container.labels) w.str(l);
  return w.take();
}

Container decode(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (bytes.size() < sizeof(kMagic) ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw LoadError(LoadFailure::kBadMagic, "expected \"MEEW1\" header");
  }
  r.take(sizeof(kMagic), "magic");
  Container c;
  const std::uint64_t count = r.u64("tensor count");
  for (std::uint64_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = r.str("tensor name");
    const std::uint32_t rank = r.u32("rank");
    if (rank == 0) throw LoadError(LoadFailure::kShapeMismatch, "tensor '" + t.name + "' has rank 0");
    Shape shape(rank);
    for (auto& e : shape) {
      e = r.u64("extent");
      if (e == 0) throw LoadError(LoadFailure::kShapeMismatch, "tensor '" + t.name + "' has a zero extent");
    }
    const std::uint8_t tag = r.u8("dtype");
    if (tag > 1) throw LoadError(LoadFailure::kBadDtype, "tensor '" + t.name + "' dtype tag " + std::to_string(tag));
    t.dtype = static_cast<DType>(tag);
    const std::size_t n = shape_size(shape);
    const std::size_t width = t.dtype == DType::kF32 ? 4 : 8;
    if (n > bytes.size() / width) {
      throw LoadError(LoadFailure::kTruncated, "tensor '" + t.name + "' larger than the file");
    }
    auto raw = r.take(n * width, "tensor values");
    std::vector<double> values(n);
    for (std::size_t k = 0; k < n; ++k) {
      const std::uint8_t* p = raw.data() + k * width;
      if (width == 4) {
        std::uint32_t u = 0;
        for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(p[b]) << (8 * b);
        values[k] = static_cast<double>(std::bit_cast<float>(u));
      } else {
        std::uint64_t u = 0;
        for (int b = 0; b < 8; ++b) u |= static_cast<std::uint64_t>(p[b]) << (8 * b);
        values[k] = std::bit_cast<double>(u);
      }
    }
    t.value = Tensor(std::move(shape), std::move(values));
    c.tensors.push_back(std::move(t));
  }
  const std::uint64_t labels = r.u64("label count");
  for (std::uint64_t i = 0; i < labels; ++i) c.labels.push_back(r.str("label"));
  return c;
}

void write_file(const Container& container, const std::filesystem::path& path) {
  const auto bytes = encode(container);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Container read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode(bytes);
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace ffcac::io
