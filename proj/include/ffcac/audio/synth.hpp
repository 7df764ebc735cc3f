#pragma once

#include <cstddef>
#include <cstdint>

#include "ffcac/audio/frontend.hpp"

namespace ffcac::audio {

// Harmonic tone classes. Class c has a fundamental placed at evenly spaced
// mel positions between min_hz and max_hz, a fixed harmonic amplitude profile
// and, per instance, jittered pitch, random phases, random gain and white noise.
struct SynthConfig {
  std::size_t num_classes = 10;
  double min_hz = 200.0;
  double max_hz = 2500.0;
  std::size_t harmonics = 4;
  // Relative pitch jitter per instance; neighbouring classes' ranges must not meet.
  double jitter = 0.03;
  // Peak amplitude of uniform white noise, at most 0.1.
  double noise_amplitude = 0.05;
  double duration_seconds = 1.0;
  int sample_rate_hz = 16000;

  void validate() const;  // ConfigError
};

// Nominal fundamental of a class (before jitter).
double class_fundamental_hz(std::size_t class_id, const SynthConfig& cfg);

// Deterministic in (class_id, instance_seed, cfg); |sample| < 1.
// ConfigError if class_id >= num_classes.
Waveform synth_class_waveform(std::size_t class_id, std::uint64_t instance_seed, const SynthConfig& cfg);

}  // namespace ffcac::audio
