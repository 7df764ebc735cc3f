#include <cmath>

#include "ffcac/ad/ops.hpp"
#include "ffcac/error.hpp"
#include "ffcac/rng.hpp"
#include "ffcac/rrc/rrc.hpp"

namespace ffcac::rrc {

CosineHead CosineHead::init(std::size_t classes, std::size_t dim, double eta, std::uint64_t seed) {
  if (classes == 0 || dim == 0) throw ConfigError("cosine head needs at least one class and one dimension");
  if (!(eta > 0)) throw ConfigError("train.eta must be positive");
  CosineHead h;
  h.eta = eta;
  h.weight = Tensor({classes, dim});
  Rng rng(seed);
  const double sd = 1.0 / std::sqrt(static_cast<double>(dim));
  for (auto& v : h.weight.values()) v = rng.normal(0.0, sd);
  return h;
}

ad::Var cosine_logits(const ad::Var& embeddings, const ad::Var& weight, double eta) {
  const ad::Var e = ad::l2_normalize(embeddings, 1);
  const ad::Var w = ad::l2_normalize(weight, 1);
  return ad::scale(ad::matmul(e, ad::transpose(w)), eta);
}

ad::Var cosine_loss(const ad::Var& embeddings, const ad::Var& weight, std::span<const std::size_t> labels,
                    double eta) {
  return ad::cross_entropy(cosine_logits(embeddings, weight, eta), labels);
}

double cosine_loss(const Tensor& embeddings, std::span<const std::size_t> labels, const CosineHead& head) {
  ad::Tape tape;
  return cosine_loss(tape.constant(embeddings), tape.constant(head.weight), labels, head.eta).value()[0];
}

}  // namespace ffcac::rrc
