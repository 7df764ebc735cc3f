#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "ffcac/tensor.hpp"

namespace ffcac::audio {

struct Waveform {
  std::vector<double> samples;  // in [-1, 1]
  int sample_rate_hz = 16000;
};

// Framing, FFT and mel settings. Frame length/shift and mel count default to
// 25 ms / 15 ms / 128; the remaining values are conventional completions.
struct FrontendConfig {
  int sample_rate_hz = 16000;
  double frame_length_ms = 25.0;
  double frame_shift_ms = 15.0;
  std::size_t fft_size = 512;
  std::size_t mel_bins = 128;
  double f_min_hz = 0.0;
  double f_max_hz = 8000.0;
  double log_floor = 1e-10;
  // Clips are center-cropped or zero-padded to this length before analysis.
  double clip_seconds = 1.0;

  std::size_t frame_length() const;
  std::size_t frame_shift() const;
  std::size_t clip_samples() const;
  // Frame count for a clip of clip_samples().
  std::size_t frames() const;
  void validate() const;  // ConfigError
};

// S_f x S_t matrix (mel bin rows, frame columns) of ln(mel energy + floor).
struct LogMelSpectrogram {
  Tensor data;

  std::size_t mel_bins() const { return data.shape()[0]; }
  std::size_t frames() const { return data.shape()[1]; }
};

// RIFF/WAVE, PCM 16-bit, mono, at expected_rate_hz. IngestionError names the
// offending property; IoError if the file cannot be read.
Waveform load_wav(const std::filesystem::path& path, int expected_rate_hz = 16000);
// Writes RIFF/WAVE PCM 16-bit mono; samples are clamped to [-1, 1).
void save_wav(const Waveform& wave, const std::filesystem::path& path);

// Center crop or symmetric zero pad to exactly `samples` samples.
Waveform fit_duration(const Waveform& wave, std::size_t samples);

// HTK mel scale.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Precomputed window and filterbank for one FrontendConfig. Thread-safe to
// share once constructed.
class LogMelExtractor {
 public:
  explicit LogMelExtractor(const FrontendConfig& cfg);

  // S_t = 1 + floor((len - frame_len) / frame_shift). IngestionError if the
  // clip is shorter than one frame or its sample rate differs from the config.
  LogMelSpectrogram operator()(const Waveform& wave) const;

  const FrontendConfig& config() const { return cfg_; }
  // (fft_size/2 + 1) x mel_bins triangular weights.
  const Tensor& filterbank() const { return filterbank_; }
  double center_hz(std::size_t mel_bin) const;

 private:
  FrontendConfig cfg_;
  std::vector<double> window_;
  std::vector<double> centers_mel_;
  Tensor filterbank_;
};

LogMelSpectrogram log_mel_spectrogram(const Waveform& wave, const FrontendConfig& cfg);

}  // namespace ffcac::audio
