#include <cmath>
#include <string>

#include "ffcac/ad/ops.hpp"
#include "ffcac/error.hpp"
#include "ffcac/mee/mee.hpp"

namespace ffcac::mee {
namespace {

// Offsets into parameter_layout.
constexpr std::size_t kPatchW = 0, kPatchB = 1, kCls = 2, kPos = 3, kGlobals = 4;
constexpr std::size_t kLn1G = 0, kLn1B = 1, kQW = 2, kQB = 3, kKW = 4, kKB = 5, kVW = 6, kVB = 7, kOW = 8, kOB = 9,
                      kLn2G = 10, kLn2B = 11, kFc1W = 12, kFc1B = 13, kFc2W = 14, kFc2B = 15, kOutG = 16,
                      kOutB = 17, kPerBlock = 18;

ad::Var affine(const ad::Var& x, const ad::Var& w, const ad::Var& b) { return ad::add(ad::matmul(x, w), b); }

ad::Var norm(const ad::Var& x, const ad::Var& gamma, const ad::Var& beta) {
  return ad::add(ad::mul(ad::layer_norm(x, 1), gamma), beta);
}

}  // namespace

BoundParams bind(ad::Tape& tape, const MeeParams& params, bool trainable) {
  BoundParams b;
  b.config = &params.config;
  b.vars.reserve(params.tensors.size());
  for (const auto& t : params.tensors) b.vars.push_back(trainable ? tape.parameter(t) : tape.constant(t));
  return b;
}

Tensor prepare_patches(const audio::LogMelSpectrogram& lms, const MeeConfig& cfg) {
  Tensor x = audio::patch_split(lms, cfg.patch).patches;
  for (double& v : x.values()) v = (v - cfg.input_mean) / cfg.input_std;
  return x;
}

std::vector<ad::Var> encoder_forward(const BoundParams& p, const Tensor& patches) {
  const EncoderConfig& ec = p.config->encoder;
  if (patches.rank() != 2 || patches.cols() != ec.patch_dim) {
    throw DimensionError("encoder expects Z x " + std::to_string(ec.patch_dim) + " patches, got " +
                         shape_string(patches.shape()));
  }
  const std::size_t Z = patches.rows();
  if (Z > ec.max_patches) {
    throw DimensionError(std::to_string(Z) + " patches exceed the positional table (" +
                         std::to_string(ec.max_patches) + ")");
  }
  const auto& v = p.vars;
  ad::Tape& tape = v[0].tape();
  const std::size_t D = ec.dim, heads = ec.heads, dh = D / heads;
  const double attn_scale = 1.0 / std::sqrt(static_cast<double>(dh));

  const ad::Var embedded = affine(tape.constant(patches), v[kPatchW], v[kPatchB]);
  const ad::Var parts[] = {v[kCls], embedded};
  ad::Var x = ad::add(ad::concat(parts, 0), ad::slice(v[kPos], 0, 0, Z + 1));

  std::vector<ad::Var> features;
  for (std::size_t l = 0; l < ec.layers; ++l) {
    const ad::Var* w = v.data() + kGlobals + l * kPerBlock;
    const ad::Var h = norm(x, w[kLn1G], w[kLn1B]);
    const ad::Var q = affine(h, w[kQW], w[kQB]);
    const ad::Var k = affine(h, w[kKW], w[kKB]);
    const ad::Var val = affine(h, w[kVW], w[kVB]);
    std::vector<ad::Var> head_out;
    for (std::size_t hd = 0; hd < heads; ++hd) {
      const ad::Var qh = ad::slice(q, 1, hd * dh, dh);
      const ad::Var kh = ad::slice(k, 1, hd * dh, dh);
      const ad::Var vh = ad::slice(val, 1, hd * dh, dh);
      const ad::Var a = ad::softmax(ad::scale(ad::matmul(qh, ad::transpose(kh)), attn_scale), 1);
      head_out.push_back(ad::matmul(a, vh));
    }
    const ad::Var attn = heads == 1 ? head_out[0] : ad::concat(head_out, 1);
    x = ad::add(x, affine(attn, w[kOW], w[kOB]));

    const ad::Var h2 = norm(x, w[kLn2G], w[kLn2B]);
    x = ad::add(x, affine(ad::gelu(affine(h2, w[kFc1W], w[kFc1B])), w[kFc2W], w[kFc2B]));

    features.push_back(ad::mean(norm(x, w[kOutG], w[kOutB]), 0));
  }
  return features;
}

FusedVars fuse(const BoundParams& p, std::span<const ad::Var> features) {
  const MeeConfig& cfg = *p.config;
  if (!cfg.fusion) throw UsageError("fusion is disabled in this model config");
  const std::size_t L = cfg.encoder.layers;
  if (features.size() != L) {
    throw DimensionError("fuse expects " + std::to_string(L) + " block features, got " +
                         std::to_string(features.size()));
  }
  for (const auto& f : features) {
    if (f.shape() != Shape{1, cfg.encoder.dim}) {
      throw DimensionError("block feature has shape " + shape_string(f.shape()) + ", expected [1x" +
                           std::to_string(cfg.encoder.dim) + "]");
    }
  }
  const std::size_t base = kGlobals + L * kPerBlock;
  const auto& v = p.vars;
  const ad::Var concat = ad::concat(features, 1);
  const ad::Var hidden = ad::relu(affine(concat, v[base], v[base + 1]));
  const ad::Var weights = ad::softmax(affine(hidden, v[base + 2], v[base + 3]), 1);
  const ad::Var stacked = ad::concat(features, 0);
  return FusedVars{ad::matmul(weights, stacked), weights};
}

ad::Var embed(const BoundParams& p, const audio::LogMelSpectrogram& lms) {
  const auto features = encoder_forward(p, prepare_patches(lms, *p.config));
  if (!p.config->fusion) return features.back();
  return fuse(p, features).e;
}

BlockFeatures encoder_forward(const audio::PatchSequence& patches, const MeeParams& params) {
  ad::Tape tape;
  const BoundParams p = bind(tape, params, false);
  Tensor x = patches.patches;
  for (double& val : x.values()) val = (val - params.config.input_mean) / params.config.input_std;
  BlockFeatures out;
  for (const auto& f : encoder_forward(p, x)) out.blocks.push_back(f.value().reshaped({params.config.encoder.dim}));
  return out;
}

Embedding fuse(const BlockFeatures& features, const MeeParams& params) {
  ad::Tape tape;
  const BoundParams p = bind(tape, params, false);
  const std::size_t D = params.config.encoder.dim;
  std::vector<ad::Var> vars;
  for (const auto& f : features.blocks) {
    if (f.size() != D) throw DimensionError("block feature has " + std::to_string(f.size()) + " values, expected " +
                                            std::to_string(D));
    vars.push_back(tape.constant(f.reshaped({1, D})));
  }
  const FusedVars fused = fuse(p, vars);
  Embedding out;
  out.e = fused.e.value().reshaped({D});
  out.weights = fused.weights.value().reshaped({vars.size()});
  out.concat = ad::concat(vars, 1).value().reshaped({vars.size() * D});
  return out;
}

Embedding mee_forward(const audio::LogMelSpectrogram& lms, const MeeParams& params) {
  const BlockFeatures bf = encoder_forward(audio::patch_split(lms, params.config.patch), params);
  if (params.config.fusion) return fuse(bf, params);
  const std::size_t L = bf.blocks.size(), D = params.config.encoder.dim;
  Embedding out;
  out.e = bf.blocks.back();
  out.weights = Tensor({L});
  out.weights[L - 1] = 1.0;
  out.concat = Tensor({L * D});
  for (std::size_t l = 0; l < L; ++l) std::copy(bf.blocks[l].data(), bf.blocks[l].data() + D, out.concat.data() + l * D);
  return out;
}

Tensor embed_all(std::span<const audio::LogMelSpectrogram> clips, const MeeParams& params) {
  const std::size_t D = params.config.encoder.dim;
  if (clips.empty()) throw UsageError("embed_all needs at least one clip");
  Tensor out({clips.size(), D});
  ad::Tape tape;
  const BoundParams p = bind(tape, params, false);
  const std::size_t mark = tape.mark();
  for (std::size_t i = 0; i < clips.size(); ++i) {
    const Tensor e = embed(p, clips[i]).value();
    std::copy(e.data(), e.data() + D, out.data() + i * D);
    tape.rewind(mark);
  }
  return out;
}

}  // namespace ffcac::mee
