#include "ffcac/audio/patches.hpp"

#include <string>

#include "ffcac/error.hpp"

namespace ffcac::audio {

void PatchConfig::validate() const {
  if (s_f == 0 || s_t == 0) throw ConfigError("patch.s_f and patch.s_t must be positive");
  if (stride == 0) throw ConfigError("patch.stride must be positive");
}

PatchGrid PatchGrid::make(std::size_t S_f, std::size_t S_t, std::size_t s_f, std::size_t s_t, std::size_t stride) {
  if (stride == 0 || s_f == 0 || s_t == 0) throw DimensionError("patch extents and stride must be positive");
  if (s_f > S_f || s_t > S_t) {
    throw DimensionError("patch " + std::to_string(s_f) + "x" + std::to_string(s_t) + " larger than spectrum " +
                         std::to_string(S_f) + "x" + std::to_string(S_t));
  }
  return PatchGrid{s_f, s_t, stride, (S_f - s_f) / stride + 1, (S_t - s_t) / stride + 1};
}

std::size_t patch_count(std::size_t S_f, std::size_t S_t, std::size_t s_f, std::size_t s_t, std::size_t stride) {
  return PatchGrid::make(S_f, S_t, s_f, s_t, stride).count();
}

PatchSequence patch_split(const LogMelSpectrogram& lms, std::size_t s_f, std::size_t s_t, std::size_t stride) {
  const PatchGrid grid = PatchGrid::make(lms.mel_bins(), lms.frames(), s_f, s_t, stride);
  Tensor out({grid.count(), s_f * s_t});
  const Tensor& src = lms.data;
  for (std::size_t r = 0; r < grid.rows; ++r) {
    for (std::size_t c = 0; c < grid.cols; ++c) {
      double* dst = out.data() + (r * grid.cols + c) * s_f * s_t;
      for (std::size_t i = 0; i < s_f; ++i) {
        for (std::size_t j = 0; j < s_t; ++j) dst[i * s_t + j] = src(r * stride + i, c * stride + j);
      }
    }
  }
  return PatchSequence{std::move(out), grid};
}

PatchSequence patch_split(const LogMelSpectrogram& lms, const PatchConfig& cfg) {
  return patch_split(lms, cfg.s_f, cfg.s_t, cfg.stride);
}

Tensor reassemble(const PatchSequence& seq) {
  const PatchGrid& g = seq.grid;
  if (g.stride != g.s_f || g.stride != g.s_t) throw UsageError("reassemble needs stride == s_f == s_t");
  Tensor out({g.rows * g.s_f, g.cols * g.s_t});
  for (std::size_t r = 0; r < g.rows; ++r) {
    for (std::size_t c = 0; c < g.cols; ++c) {
      const double* p = seq.patches.data() + (r * g.cols + c) * g.s_f * g.s_t;
      for (std::size_t i = 0; i < g.s_f; ++i) {
        for (std::size_t j = 0; j < g.s_t; ++j) out(r * g.s_f + i, c * g.s_t + j) = p[i * g.s_t + j];
      }
    }
  }
  return out;
}

}  // namespace ffcac::audio
