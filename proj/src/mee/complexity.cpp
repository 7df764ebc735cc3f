#include "ffcac/mee/mee.hpp"

namespace ffcac::mee {

ComplexityReport count_params_macs(const MeeConfig& cfg, std::size_t patches, std::size_t num_classes) {
  cfg.validate();
  ComplexityReport r;
  for (const auto& entry : parameter_layout(cfg)) r.np += shape_size(entry.second);

  const std::uint64_t Z = patches, T = Z + 1, D = cfg.encoder.dim, H = cfg.encoder.mlp_hidden,
                      L = cfg.encoder.layers, P = cfg.encoder.patch_dim, F = cfg.fusion_width(), N = num_classes;
  std::uint64_t macs = Z * P * D;
  const std::uint64_t per_block = 4 * T * D * D   // q, k, v, output projections
                                  + 2 * T * T * D  // scores and weighted values, all heads
                                  + 2 * T * D * H;  // feed-forward
  macs += L * per_block;
  if (cfg.fusion) macs += L * D * F + F * L + L * D;
  macs += D * N;
  r.macs = macs;
  r.classifier_params = D * N;
  r.patches = Z;
  return r;
}

}  // namespace ffcac::mee
