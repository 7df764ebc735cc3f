#include "ffcac/audio/synth.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "ffcac/error.hpp"
#include "ffcac/rng.hpp"

namespace ffcac::audio {
namespace {

constexpr std::uint64_t kProfileStream = 0x70726f66696c65ULL;

// Fundamental carries weight 1; overtones lie in [0.15, 0.65] so the
// fundamental stays the strongest partial.
std::vector<double> harmonic_profile(std::size_t class_id, std::size_t harmonics) {
  Rng rng(derive_seed(kProfileStream, class_id));
  std::vector<double> a(harmonics, 1.0);
  for (std::size_t h = 1; h < harmonics; ++h) a[h] = rng.uniform(0.15, 0.65);
  return a;
}

}  // namespace

void SynthConfig::validate() const {
  if (num_classes == 0) throw ConfigError("synth.num_classes must be positive");
  if (!(min_hz > 0) || !(max_hz >= min_hz)) throw ConfigError("synth needs 0 < min_hz <= max_hz");
  if (num_classes > 1 && !(max_hz > min_hz)) throw ConfigError("synth.max_hz must exceed min_hz for several classes");
  if (harmonics == 0) throw ConfigError("synth.harmonics must be positive");
  if (!(jitter >= 0) || jitter >= 0.5) throw ConfigError("synth.jitter must lie in [0, 0.5)");
  if (!(noise_amplitude >= 0) || noise_amplitude > 0.1) throw ConfigError("synth.noise_amplitude must lie in [0, 0.1]");
  if (!(duration_seconds > 0)) throw ConfigError("synth.duration_seconds must be positive");
  if (sample_rate_hz <= 0) throw ConfigError("synth.sample_rate_hz must be positive");
  if (max_hz * (1 + jitter) >= sample_rate_hz / 2.0) throw ConfigError("synth.max_hz exceeds the Nyquist limit");
  for (std::size_t c = 0; c + 1 < num_classes; ++c) {
    if (class_fundamental_hz(c, *this) * (1 + jitter) >= class_fundamental_hz(c + 1, *this) * (1 - jitter)) {
      throw ConfigError("synth.jitter too large: pitch ranges of classes " + std::to_string(c) + " and " +
                        std::to_string(c + 1) + " overlap");
    }
  }
}

double class_fundamental_hz(std::size_t class_id, const SynthConfig& cfg) {
  if (cfg.num_classes <= 1) return cfg.min_hz;
  const double lo = hz_to_mel(cfg.min_hz);
  const double hi = hz_to_mel(cfg.max_hz);
  return mel_to_hz(lo + (hi - lo) * static_cast<double>(class_id) / static_cast<double>(cfg.num_classes - 1));
}

Waveform synth_class_waveform(std::size_t class_id, std::uint64_t instance_seed, const SynthConfig& cfg) {
  cfg.validate();
  if (class_id >= cfg.num_classes) {
    throw ConfigError("class_id " + std::to_string(class_id) + " out of range for " + std::to_string(cfg.num_classes) +
                      " classes");
  }
  const std::vector<double> profile = harmonic_profile(class_id, cfg.harmonics);
  Rng rng(derive_seed(instance_seed, class_id));
  const double f0 = class_fundamental_hz(class_id, cfg) * (1.0 + rng.uniform(-cfg.jitter, cfg.jitter));
  const double gain = rng.uniform(0.6, 1.0);
  const double nyquist = cfg.sample_rate_hz / 2.0;

  std::vector<double> amp, freq, phase;
  double total = 0.0;
  for (std::size_t h = 0; h < cfg.harmonics; ++h) {
    const double f = f0 * static_cast<double>(h + 1);
    const double ph = rng.uniform(0.0, 2.0 * std::numbers::pi);
    if (f >= 0.95 * nyquist) continue;
    amp.push_back(profile[h]);
    freq.push_back(f);
    phase.push_back(ph);
    total += profile[h];
  }

  Waveform w;
  w.sample_rate_hz = cfg.sample_rate_hz;
  w.samples.resize(static_cast<std::size_t>(std::lround(cfg.duration_seconds * cfg.sample_rate_hz)));
  const double norm = 0.85 * gain / total;
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    const double t = static_cast<double>(i) / cfg.sample_rate_hz;
    double s = 0.0;
    for (std::size_t h = 0; h < amp.size(); ++h) s += amp[h] * std::sin(2.0 * std::numbers::pi * freq[h] * t + phase[h]);
    w.samples[i] = norm * s;
  }
  if (cfg.noise_amplitude > 0) {
    for (double& s : w.samples) s += rng.uniform(-cfg.noise_amplitude, cfg.noise_amplitude);
  }
  return w;
}

}  // namespace ffcac::audio
