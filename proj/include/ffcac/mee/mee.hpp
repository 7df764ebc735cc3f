#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ffcac/ad/tape.hpp"
#include "ffcac/audio/frontend.hpp"
#include "ffcac/audio/patches.hpp"
#include "ffcac/container.hpp"
#include "ffcac/tensor.hpp"

// Multi-level embedding extractor: patch embedding, a pre-norm transformer
// encoder whose every block is tapped, and the fusion MLP that mixes the
// per-block features into one embedding.
namespace ffcac::mee {

struct EncoderConfig {
  std::size_t layers = 2;       // L
  std::size_t dim = 32;         // D
  std::size_t heads = 4;
  std::size_t mlp_hidden = 64;
  std::size_t max_patches = 32;  // Z_max; the positional table has Z_max + 1 rows
  std::size_t patch_dim = 256;   // s_f * s_t

  void validate() const;  // ConfigError
};

struct MeeConfig {
  EncoderConfig encoder;
  audio::PatchConfig patch;
  // 0 means D.
  std::size_t fusion_hidden = 0;
  // Off: the embedding is the last block's feature.
  bool fusion = true;
  // Patches enter the encoder as (x - input_mean) / input_std.
  double input_mean = 0.0;
  double input_std = 1.0;
  // Std of the class token and positional table at initialisation.
  double token_init_std = 0.02;

  std::size_t fusion_width() const { return fusion_hidden == 0 ? encoder.dim : fusion_hidden; }
  void validate() const;  // ConfigError
};

// Ordered (name, shape) list of every parameter tensor. The fusion MLP is
// absent when fusion is off.
std::vector<std::pair<std::string, Shape>> parameter_layout(const MeeConfig& cfg);

struct MeeParams {
  MeeConfig config;
  std::vector<std::string> names;
  std::vector<Tensor> tensors;  // same order as names

  Tensor& at(std::string_view name);
  const Tensor& at(std::string_view name) const;
  std::size_t count() const;  // total scalar parameters
};

// Weight matrices ~ N(0, 1/fan_in), biases 0, layer-norm gains 1, class token
// and positions ~ N(0, token_init_std^2).
MeeParams init_params(const MeeConfig& cfg, std::uint64_t seed);

// Per-block pooled features f^1..f^L, each of length D.
struct BlockFeatures {
  std::vector<Tensor> blocks;
};

struct Embedding {
  Tensor e;         // [D]
  Tensor weights;   // fusion weights W_f, [L] (one-hot on the last block when fusion is off)
  Tensor concat;    // e' = [f^1 ... f^L], [L*D]
};

// Tape-level building blocks, used for training.
struct BoundParams {
  const MeeConfig* config = nullptr;
  std::vector<ad::Var> vars;  // parameter_layout order
};

// trainable: parameters require grad; otherwise they enter as constants.
BoundParams bind(ad::Tape& tape, const MeeParams& params, bool trainable);

// Standardised Z x patch_dim input.
Tensor prepare_patches(const audio::LogMelSpectrogram& lms, const MeeConfig& cfg);

// Returns L vars of shape [1 x D]. DimensionError if Z > Z_max or the patch
// width differs from patch_dim.
std::vector<ad::Var> encoder_forward(const BoundParams& p, const Tensor& patches);

struct FusedVars {
  ad::Var e;        // [1 x D]
  ad::Var weights;  // [1 x L]
};
FusedVars fuse(const BoundParams& p, std::span<const ad::Var> features);

// Full clip -> embedding ([1 x D]) on the tape.
ad::Var embed(const BoundParams& p, const audio::LogMelSpectrogram& lms);

// Value-level wrappers. Each builds its own tape, so they are safe to call
// concurrently with shared read-only params.
BlockFeatures encoder_forward(const audio::PatchSequence& patches, const MeeParams& params);
Embedding fuse(const BlockFeatures& features, const MeeParams& params);
Embedding mee_forward(const audio::LogMelSpectrogram& lms, const MeeParams& params);

// Embeds every clip with one bound tape; rows of the result are embeddings.
Tensor embed_all(std::span<const audio::LogMelSpectrogram> clips, const MeeParams& params);

// Container form: one f32 record per tensor, named as in parameter_layout.
io::Container to_container(const MeeParams& params, io::DType dtype = io::DType::kF32);
// LoadError(kShapeMismatch) lists missing, unexpected and mis-shaped tensors.
MeeParams from_container(const io::Container& container, const MeeConfig& cfg);
void save_params(const MeeParams& params, const std::filesystem::path& path);
MeeParams load_params(const std::filesystem::path& path, const MeeConfig& cfg);

// FNV-1a over the f64 container encoding; changes iff any parameter bit does.
std::uint64_t parameter_checksum(const MeeParams& params);

struct ComplexityReport {
  std::uint64_t np = 0;                 // extractor parameters
  std::uint64_t macs = 0;               // one clip, extractor + classifier scores
  std::uint64_t classifier_params = 0;  // D x num_classes ridge weights
  std::uint64_t patches = 0;            // Z used for the MAC count
};

// MACs count patch embedding, each block's projections, attention products
// and feed-forward maps at T = Z + 1 tokens, the fusion MLP and weighted sum,
// and the D x N cosine scores. Normalisations and softmax are not counted.
ComplexityReport count_params_macs(const MeeConfig& cfg, std::size_t patches, std::size_t num_classes);

}  // namespace ffcac::mee
