#pragma once

#include <cstddef>

#include "ffcac/audio/frontend.hpp"
#include "ffcac/tensor.hpp"

namespace ffcac::audio {

struct PatchConfig {
  std::size_t s_f = 16;
  std::size_t s_t = 16;
  std::size_t stride = 16;

  std::size_t patch_dim() const { return s_f * s_t; }
  void validate() const;  // ConfigError
};

// Patch layout over an S_f x S_t spectrogram.
struct PatchGrid {
  std::size_t s_f = 0;
  std::size_t s_t = 0;
  std::size_t stride = 0;
  std::size_t rows = 0;  // along frequency
  std::size_t cols = 0;  // along time

  std::size_t count() const { return rows * cols; }

  // DimensionError if a patch does not fit or stride is zero.
  static PatchGrid make(std::size_t S_f, std::size_t S_t, std::size_t s_f, std::size_t s_t, std::size_t stride);
  static PatchGrid make(std::size_t S_f, std::size_t S_t, const PatchConfig& cfg) {
    return make(S_f, S_t, cfg.s_f, cfg.s_t, cfg.stride);
  }
};

// Z = floor((S_f - s_f)/d + 1) * floor((S_t - s_t)/d + 1).
std::size_t patch_count(std::size_t S_f, std::size_t S_t, std::size_t s_f, std::size_t s_t, std::size_t stride);

// Z x (s_f * s_t). Patch z = r * cols + c starts at (r*d, c*d); each patch is
// flattened row-major over (frequency, time).
struct PatchSequence {
  Tensor patches;
  PatchGrid grid;

  std::size_t size() const { return grid.count(); }
};

PatchSequence patch_split(const LogMelSpectrogram& lms, std::size_t s_f, std::size_t s_t, std::size_t stride);
PatchSequence patch_split(const LogMelSpectrogram& lms, const PatchConfig& cfg);

// Inverse of patch_split for non-overlapping grids (stride == s_f == s_t):
// the (rows*s_f) x (cols*s_t) top-left crop of the source spectrogram.
Tensor reassemble(const PatchSequence& seq);

}  // namespace ffcac::audio
