#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

#include "doctest.h"
#include "ffcac/audio/fft.hpp"
#include "ffcac/audio/frontend.hpp"
#include "ffcac/audio/manifest.hpp"
#include "ffcac/audio/patches.hpp"
#include "ffcac/audio/synth.hpp"
#include "ffcac/error.hpp"
#include "ffcac/rng.hpp"

using namespace ffcac;
using namespace ffcac::audio;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("ffcac_test_audio_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Waveform tone(double hz, std::size_t n, double amp = 0.5) {
  Waveform w;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) w.samples[i] = amp * std::sin(2.0 * std::numbers::pi * hz * i / 16000.0);
  return w;
}

// Little-endian WAV header with arbitrary format fields.
void write_raw_wav(const fs::path& p, std::uint16_t format, std::uint16_t channels, std::uint32_t rate,
                   std::uint16_t bits, std::size_t frames) {
  auto u32 = [](std::string& s, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>(v >> (8 * i)));
  };
  auto u16 = [](std::string& s, std::uint16_t v) {
    s.push_back(static_cast<char>(v));
    s.push_back(static_cast<char>(v >> 8));
  };
  const std::uint32_t bytes = static_cast<std::uint32_t>(frames * channels * bits / 8);
  std::string s = "RIFF";
  u32(s, 36 + bytes);
  s += "WAVEfmt ";
  u32(s, 16);
  u16(s, format);
  u16(s, channels);
  u32(s, rate);
  u32(s, rate * channels * bits / 8);
  u16(s, static_cast<std::uint16_t>(channels * bits / 8));
  u16(s, bits);
  s += "data";
  u32(s, bytes);
  s.append(bytes, '\0');
  std::ofstream(p, std::ios::binary) << s;
}

}  // namespace

TEST_CASE("fft matches a direct DFT") {
  Rng rng(3);
  for (std::size_t n : {1u, 2u, 8u, 64u, 512u}) {
    std::vector<std::complex<double>> x(n);
    for (auto& v : x) v = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    auto y = x;
    fft_inplace(y);
    for (std::size_t k = 0; k < n; ++k) {
      std::complex<long double> acc = 0;
      for (std::size_t j = 0; j < n; ++j) {
        const long double a = -2.0L * std::numbers::pi_v<long double> * j * k / n;
        acc += std::complex<long double>(x[j].real(), x[j].imag()) * std::complex<long double>(std::cos(a), std::sin(a));
      }
      CHECK(std::abs(y[k].real() - static_cast<double>(acc.real())) < 1e-10 * n);
      CHECK(std::abs(y[k].imag() - static_cast<double>(acc.imag())) < 1e-10 * n);
    }
  }
  std::vector<std::complex<double>> bad(6);
  CHECK_THROWS_AS(fft_inplace(bad), DimensionError);
}

TEST_CASE("wav round trip and PCM scaling") {
  const fs::path dir = scratch_dir("wav");
  Waveform silence;
  silence.samples.assign(16000, 0.0);
  save_wav(silence, dir / "silence.wav");
  const Waveform s = load_wav(dir / "silence.wav");
  CHECK(s.samples.size() == 16000);
  CHECK(s.sample_rate_hz == 16000);
  for (double v : s.samples) REQUIRE(v == 0.0);

  Waveform square;
  for (int i = 0; i < 320; ++i) square.samples.push_back((i / 20) % 2 ? -1.0 : 1.0);
  save_wav(square, dir / "square.wav");
  const Waveform q = load_wav(dir / "square.wav");
  for (std::size_t i = 0; i < q.samples.size(); ++i) {
    CHECK(q.samples[i] == (square.samples[i] < 0 ? -1.0 : 1.0 - std::ldexp(1.0, -15)));
  }

  // Any sample on the 16-bit grid survives exactly.
  Rng rng(5);
  Waveform grid;
  for (int i = 0; i < 1000; ++i) grid.samples.push_back(static_cast<double>(static_cast<int>(rng.below(65536)) - 32768) / 32768.0);
  save_wav(grid, dir / "grid.wav");
  CHECK(load_wav(dir / "grid.wav").samples == grid.samples);
}

TEST_CASE("wav rejections name the offending property") {
  const fs::path dir = scratch_dir("wav_bad");
  auto message = [](const fs::path& p) {
    try {
      load_wav(p);
    } catch (const IngestionError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  write_raw_wav(dir / "stereo.wav", 1, 2, 16000, 16, 100);
  CHECK(message(dir / "stereo.wav").find("channels=2") != std::string::npos);
  write_raw_wav(dir / "float.wav", 3, 1, 16000, 32, 100);
  CHECK(message(dir / "float.wav").find("format tag 3") != std::string::npos);
  write_raw_wav(dir / "b24.wav", 1, 1, 16000, 24, 100);
  CHECK(message(dir / "b24.wav").find("bits_per_sample=24") != std::string::npos);
  write_raw_wav(dir / "rate.wav", 1, 1, 44100, 16, 100);
  CHECK(message(dir / "rate.wav").find("sample_rate=44100") != std::string::npos);
  std::ofstream(dir / "junk.wav") << "not a wav file at all";
  CHECK(message(dir / "junk.wav").find("RIFF") != std::string::npos);
  CHECK_THROWS_AS(load_wav(dir / "missing.wav"), IoError);
}

TEST_CASE("framing and duration fitting") {
  FrontendConfig cfg;
  CHECK(cfg.frame_length() == 400);
  CHECK(cfg.frame_shift() == 240);
  CHECK(cfg.frames() == 66);

  Waveform w;
  w.samples = {1, 2, 3, 4, 5, 6};
  CHECK(fit_duration(w, 4).samples == std::vector<double>{2, 3, 4, 5});
  CHECK(fit_duration(w, 10).samples == std::vector<double>{0, 0, 1, 2, 3, 4, 5, 6, 0, 0});
  CHECK(fit_duration(w, 6).samples == w.samples);
}

TEST_CASE("log mel of silence is the log floor") {
  FrontendConfig cfg;
  Waveform w;
  w.samples.assign(16000, 0.0);
  const auto lms = log_mel_spectrogram(w, cfg);
  CHECK(lms.mel_bins() == 128);
  CHECK(lms.frames() == 66);
  for (double v : lms.data.values()) REQUIRE(v == std::log(1e-10));
}

TEST_CASE("log mel rejects clips shorter than one frame and wrong rates") {
  FrontendConfig cfg;
  Waveform w;
  w.samples.assign(399, 0.0);
  CHECK_THROWS_AS(log_mel_spectrogram(w, cfg), IngestionError);
  w.samples.assign(400, 0.0);
  CHECK(log_mel_spectrogram(w, cfg).frames() == 1);
  w.sample_rate_hz = 8000;
  CHECK_THROWS_AS(log_mel_spectrogram(w, cfg), IngestionError);
}

TEST_CASE("1 kHz tone peaks in the filter centred nearest 1 kHz") {
  FrontendConfig cfg;
  const auto lms = log_mel_spectrogram(tone(1000.0, 16000), cfg);
  // Independent placement of the filter centres: 130 equally spaced HTK-mel
  // edges over 0..8 kHz, centres at edges 1..128.
  const double top = 2595.0 * std::log10(1.0 + 8000.0 / 700.0);
  const double target = 2595.0 * std::log10(1.0 + 1000.0 / 700.0);
  std::size_t nearest = 0;
  for (std::size_t j = 1; j < 128; ++j) {
    if (std::abs((j + 1) * top / 129 - target) < std::abs((nearest + 1) * top / 129 - target)) nearest = j;
  }
  for (std::size_t t = 0; t < lms.frames(); ++t) {
    std::size_t best = 0;
    for (std::size_t m = 1; m < 128; ++m) {
      if (lms.data(m, t) > lms.data(best, t)) best = m;
    }
    REQUIRE(best == nearest);
  }
}

TEST_CASE("filterbank rows are triangles peaking at the centre") {
  LogMelExtractor ex{FrontendConfig{}};
  const Tensor& fb = ex.filterbank();
  CHECK(fb.rows() == 257);
  CHECK(fb.cols() == 128);
  for (double v : fb.values()) REQUIRE((v >= 0.0 && v <= 1.0));
  CHECK(std::abs(ex.center_hz(127) - mel_to_hz(hz_to_mel(8000.0) * 128 / 129)) < 1e-9);
}

TEST_CASE("log mel is translation consistent") {
  FrontendConfig cfg;
  Rng rng(11);
  Waveform w;
  for (int i = 0; i < 16000; ++i) w.samples.push_back(rng.uniform(-0.5, 0.5));
  Waveform delayed;
  delayed.samples.assign(240, 0.0);
  delayed.samples.insert(delayed.samples.end(), w.samples.begin(), w.samples.end() - 240);
  const auto a = log_mel_spectrogram(w, cfg);
  const auto b = log_mel_spectrogram(delayed, cfg);
  for (std::size_t t = 0; t + 1 < a.frames(); ++t) {
    for (std::size_t m = 0; m < 128; ++m) REQUIRE(std::abs(b.data(m, t + 1) - a.data(m, t)) <= 1e-9);
  }
}

TEST_CASE("patch counts: worked cases") {
  CHECK(patch_count(16, 16, 16, 16, 7) == 1);
  const auto g = PatchGrid::make(128, 106, 16, 16, 10);
  CHECK(g.rows == 12);
  CHECK(g.cols == 10);
  CHECK(g.count() == 120);
  const auto h = PatchGrid::make(128, 160, 16, 16, 16);
  CHECK(h.rows == 8);
  CHECK(h.cols == 10);
  CHECK(h.count() == 80);
  CHECK_THROWS_AS(PatchGrid::make(8, 100, 16, 16, 16), DimensionError);
  CHECK_THROWS_AS(PatchGrid::make(128, 100, 16, 16, 0), DimensionError);
}

TEST_CASE("patch count equals enumeration of patch origins") {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t S_f = 1 + rng.below(140), S_t = 1 + rng.below(300);
    const std::size_t s_f = 1 + rng.below(S_f), s_t = 1 + rng.below(S_t), d = 1 + rng.below(20);
    std::size_t enumerated = 0;
    for (std::size_t f = 0; f + s_f <= S_f; ++f) {
      for (std::size_t t = 0; t + s_t <= S_t; ++t) enumerated += (f % d == 0 && t % d == 0);
    }
    REQUIRE(patch_count(S_f, S_t, s_f, s_t, d) == enumerated);
  }
}

TEST_CASE("patch split order and reassembly") {
  LogMelSpectrogram lms{Tensor({6, 9})};
  for (std::size_t i = 0; i < lms.data.size(); ++i) lms.data[i] = static_cast<double>(i);
  const auto seq = patch_split(lms, 3, 3, 3);
  CHECK(seq.size() == 6);
  CHECK(seq.patches.shape() == Shape{6, 9});
  // Patch 1 is frequency row 0, time column 1.
  CHECK(seq.patches(1, 0) == lms.data(0, 3));
  // Patch 3 is frequency row 1, time column 0.
  CHECK(seq.patches(3, 0) == lms.data(3, 0));
  CHECK(seq.patches(3, 4) == lms.data(4, 1));

  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t p = 1 + rng.below(6);
    LogMelSpectrogram x{Tensor({p + rng.below(30), p + rng.below(30)})};
    for (auto& v : x.data.values()) v = rng.uniform(-5, 5);
    const auto s = patch_split(x, p, p, p);
    const Tensor back = reassemble(s);
    for (std::size_t r = 0; r < back.rows(); ++r) {
      for (std::size_t c = 0; c < back.cols(); ++c) REQUIRE(back(r, c) == x.data(r, c));
    }
  }
  CHECK_THROWS_AS(reassemble(patch_split(lms, 3, 3, 2)), UsageError);
}

TEST_CASE("synthetic classes") {
  SynthConfig cfg;
  const auto a = synth_class_waveform(3, 99, cfg);
  const auto b = synth_class_waveform(3, 99, cfg);
  CHECK(a.samples == b.samples);
  CHECK(a.samples.size() == 16000);
  CHECK(synth_class_waveform(3, 100, cfg).samples != a.samples);
  for (std::size_t c = 0; c < cfg.num_classes; ++c) {
    for (std::uint64_t s = 0; s < 5; ++s) {
      for (double v : synth_class_waveform(c, s, cfg).samples) REQUIRE(std::abs(v) < 1.0);
    }
  }
  CHECK_THROWS_AS(synth_class_waveform(10, 0, cfg), ConfigError);
  SynthConfig wide = cfg;
  wide.jitter = 0.3;
  CHECK_THROWS_AS(wide.validate(), ConfigError);

  // Fundamentals strictly increase and their jitter ranges are disjoint.
  for (std::size_t c = 0; c + 1 < cfg.num_classes; ++c) {
    CHECK(class_fundamental_hz(c, cfg) * (1 + cfg.jitter) < class_fundamental_hz(c + 1, cfg) * (1 - cfg.jitter));
  }
}

TEST_CASE("noise-free classes have disjoint dominant mel bins") {
  SynthConfig cfg;
  cfg.num_classes = 2;
  cfg.noise_amplitude = 0.0;
  FrontendConfig fe;
  std::set<std::size_t> seen[2];
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto lms = log_mel_spectrogram(synth_class_waveform(c, s, cfg), fe);
      for (std::size_t t = 0; t < lms.frames(); ++t) {
        std::size_t best = 0;
        for (std::size_t m = 1; m < 128; ++m) {
          if (lms.data(m, t) > lms.data(best, t)) best = m;
        }
        seen[c].insert(best);
      }
    }
  }
  for (std::size_t m : seen[0]) CHECK(seen[1].count(m) == 0);
}

TEST_CASE("manifest round trip and validation") {
  const fs::path dir = scratch_dir("manifest");
  std::vector<ManifestEntry> entries = {{"a/x.wav", "dog", Split::kTrain}, {"b.wav", "cat", Split::kTest}};
  write_manifest(entries, dir / "m.csv");
  const auto back = read_manifest(dir / "m.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[0].path == dir / "a/x.wav");
  CHECK(back[0].label == "dog");
  CHECK(back[1].split == Split::kTest);

  std::ofstream(dir / "bad_header.csv") << "file,label,split\nx.wav,a,train\n";
  CHECK_THROWS_AS(read_manifest(dir / "bad_header.csv"), IngestionError);
  std::ofstream(dir / "bad_split.csv") << "path,label,split\nx.wav,a,val\n";
  CHECK_THROWS_AS(read_manifest(dir / "bad_split.csv"), IngestionError);
  std::ofstream(dir / "fields.csv") << "path,label,split\nx.wav,a\n";
  CHECK_THROWS_AS(read_manifest(dir / "fields.csv"), IngestionError);
  std::ofstream(dir / "crlf.csv") << "path,label,split\r\nx.wav,a,train\r\n";
  CHECK_THROWS_AS(read_manifest(dir / "crlf.csv"), IngestionError);
  CHECK_THROWS_AS(read_manifest(dir / "none.csv"), IoError);
}
