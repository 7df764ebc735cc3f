#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "ffcac/audio/frontend.hpp"
#include "ffcac/error.hpp"

namespace ffcac::audio {
namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

constexpr std::uint16_t kFormatPcm = 1;

}  // namespace

Waveform load_wav(const std::filesystem::path& path, int expected_rate_hz) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::string where = path.string() + ": ";

  if (bytes.size() < 12 || std::memcmp(data, "RIFF", 4) != 0 || std::memcmp(data + 8, "WAVE", 4) != 0) {
    throw IngestionError(where + "container is not RIFF/WAVE");
  }

  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t chunk_size = read_u32(data + pos + 4);
    const std::size_t body = pos + 8;
    if (body + chunk_size > bytes.size()) throw IngestionError(where + "chunk extends past end of file");
    if (std::memcmp(data + pos, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw IngestionError(where + "fmt chunk too short");
      const std::uint16_t format = read_u16(data + body);
      channels = read_u16(data + body + 2);
      rate = read_u32(data + body + 4);
      bits = read_u16(data + body + 14);
      if (format != kFormatPcm) {
        throw IngestionError(where + "encoding format tag " + std::to_string(format) + " unsupported (PCM required)");
      }
      if (channels != 1) throw IngestionError(where + "channels=" + std::to_string(channels) + " (mono required)");
      if (bits != 16) {
        throw IngestionError(where + "bits_per_sample=" + std::to_string(bits) + " (16 required)");
      }
      if (static_cast<int>(rate) != expected_rate_hz) {
        throw IngestionError(where + "sample_rate=" + std::to_string(rate) + " (" +
                             std::to_string(expected_rate_hz) + " required)");
      }
      have_fmt = true;
    } else if (std::memcmp(data + pos, "data", 4) == 0) {
      if (!have_fmt) throw IngestionError(where + "data chunk before fmt chunk");
      if (chunk_size % 2 != 0) throw IngestionError(where + "data chunk has odd byte count");
      Waveform w;
      w.sample_rate_hz = static_cast<int>(rate);
      w.samples.resize(chunk_size / 2);
      for (std::size_t i = 0; i < w.samples.size(); ++i) {
        const auto raw = static_cast<std::int16_t>(read_u16(data + body + 2 * i));
        w.samples[i] = static_cast<double>(raw) / 32768.0;
      }
      if (w.samples.empty()) throw IngestionError(where + "no samples");
      return w;
    }
    pos = body + chunk_size + (chunk_size & 1);
  }
  throw IngestionError(where + (have_fmt ? "missing data chunk" : "missing fmt chunk"));
}

void save_wav(const Waveform& wave, const std::filesystem::path& path) {
  const auto n = static_cast<std::uint32_t>(wave.samples.size());
  std::string out;
  out.reserve(44 + 2 * static_cast<std::size_t>(n));
  out += "RIFF";
  put_u32(out, 36 + 2 * n);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(wave.sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(wave.sample_rate_hz) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, 2 * n);
  for (double s : wave.samples) {
    const double scaled = std::nearbyint(std::clamp(s, -1.0, 1.0) * 32768.0);
    const auto q = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    put_u16(out, static_cast<std::uint16_t>(q));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed for " + path.string());
}

Waveform fit_duration(const Waveform& wave, std::size_t samples) {
  Waveform out;
  out.sample_rate_hz = wave.sample_rate_hz;
  out.samples.assign(samples, 0.0);
  const std::size_t n = wave.samples.size();
  if (n >= samples) {
    const std::size_t start = (n - samples) / 2;
    std::copy_n(wave.samples.begin() + static_cast<std::ptrdiff_t>(start), samples, out.samples.begin());
  } else {
    const std::size_t offset = (samples - n) / 2;
    std::copy(wave.samples.begin(), wave.samples.end(), out.samples.begin() + static_cast<std::ptrdiff_t>(offset));
  }
  return out;
}

}  // namespace ffcac::audio
