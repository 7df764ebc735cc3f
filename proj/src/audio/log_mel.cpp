#include <cmath>
#include <numbers>

#include "ffcac/audio/fft.hpp"
#include "ffcac/audio/frontend.hpp"
#include "ffcac/error.hpp"
#include "ffcac/simd/kernels.hpp"

namespace ffcac::audio {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::size_t FrontendConfig::frame_length() const {
  return static_cast<std::size_t>(std::lround(frame_length_ms * sample_rate_hz / 1000.0));
}

std::size_t FrontendConfig::frame_shift() const {
  return static_cast<std::size_t>(std::lround(frame_shift_ms * sample_rate_hz / 1000.0));
}

std::size_t FrontendConfig::clip_samples() const {
  return static_cast<std::size_t>(std::lround(clip_seconds * sample_rate_hz));
}

std::size_t FrontendConfig::frames() const {
  const std::size_t n = clip_samples();
  const std::size_t len = frame_length();
  return n < len ? 0 : 1 + (n - len) / frame_shift();
}

void FrontendConfig::validate() const {
  if (sample_rate_hz <= 0) throw ConfigError("frontend.sample_rate_hz must be positive");
  if (!(frame_length_ms > 0) || frame_length() == 0) throw ConfigError("frontend.frame_length_ms must be positive");
  if (!(frame_shift_ms > 0) || frame_shift() == 0) throw ConfigError("frontend.frame_shift_ms must be positive");
  if (!is_power_of_two(fft_size)) throw ConfigError("frontend.fft_size must be a power of two");
  if (fft_size < frame_length()) throw ConfigError("frontend.fft_size is smaller than the frame length");
  if (mel_bins == 0) throw ConfigError("frontend.mel_bins must be positive");
  if (!(f_min_hz >= 0) || !(f_max_hz > f_min_hz) || f_max_hz > sample_rate_hz / 2.0) {
    throw ConfigError("frontend mel range must satisfy 0 <= f_min_hz < f_max_hz <= sample_rate_hz/2");
  }
  if (!(log_floor > 0)) throw ConfigError("frontend.log_floor must be positive");
  if (!(clip_seconds > 0) || frames() == 0) throw ConfigError("frontend.clip_seconds must hold at least one frame");
}

LogMelExtractor::LogMelExtractor(const FrontendConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const std::size_t len = cfg_.frame_length();
  window_.resize(len);
  // Periodic Hann.
  for (std::size_t i = 0; i < len; ++i) {
    window_[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(len));
  }

  const std::size_t bins = cfg_.fft_size / 2 + 1;
  const std::size_t m = cfg_.mel_bins;
  const double lo = hz_to_mel(cfg_.f_min_hz);
  const double hi = hz_to_mel(cfg_.f_max_hz);
  std::vector<double> edges(m + 2);
  for (std::size_t i = 0; i < m + 2; ++i) edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(m + 1);
  centers_mel_.assign(edges.begin() + 1, edges.end() - 1);

  filterbank_ = Tensor({bins, m});
  for (std::size_t k = 0; k < bins; ++k) {
    const double f = static_cast<double>(k) * cfg_.sample_rate_hz / static_cast<double>(cfg_.fft_size);
    const double mel = hz_to_mel(f);
    for (std::size_t j = 0; j < m; ++j) {
      const double left = edges[j], center = edges[j + 1], right = edges[j + 2];
      double w = 0.0;
      if (mel > left && mel <= center) {
        w = (mel - left) / (center - left);
      } else if (mel > center && mel < right) {
        w = (right - mel) / (right - center);
      }
      filterbank_(k, j) = w;
    }
  }
}

double LogMelExtractor::center_hz(std::size_t mel_bin) const { return mel_to_hz(centers_mel_.at(mel_bin)); }

LogMelSpectrogram LogMelExtractor::operator()(const Waveform& wave) const {
  if (wave.sample_rate_hz != cfg_.sample_rate_hz) {
    throw IngestionError("sample_rate=" + std::to_string(wave.sample_rate_hz) + " (" +
                         std::to_string(cfg_.sample_rate_hz) + " required)");
  }
  const std::size_t len = cfg_.frame_length();
  const std::size_t shift = cfg_.frame_shift();
  if (wave.samples.size() < len) {
    throw IngestionError("clip of " + std::to_string(wave.samples.size()) + " samples is shorter than one frame (" +
                         std::to_string(len) + ")");
  }
  const std::size_t frames = 1 + (wave.samples.size() - len) / shift;
  const std::size_t bins = cfg_.fft_size / 2 + 1;
  const std::size_t m = cfg_.mel_bins;

  std::vector<double> power(frames * bins);
  std::vector<double> frame(len);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t i = 0; i < len; ++i) frame[i] = wave.samples[t * shift + i] * window_[i];
    const auto p = power_spectrum(frame, cfg_.fft_size);
    std::copy(p.begin(), p.end(), power.begin() + static_cast<std::ptrdiff_t>(t * bins));
  }
  // (mel x bins) * (frames x bins)^T -> mel x frames
  Tensor energy({m, frames});
  simd::gemm(true, true, m, frames, bins, filterbank_.data(), power.data(), energy.data(), false);
  for (double& v : energy.values()) v = std::log(v + cfg_.log_floor);
  return LogMelSpectrogram{std::move(energy)};
}

LogMelSpectrogram log_mel_spectrogram(const Waveform& wave, const FrontendConfig& cfg) {
  return LogMelExtractor(cfg)(wave);
}

}  // namespace ffcac::audio
