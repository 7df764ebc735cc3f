#include <algorithm>
#include <cmath>
#include <string>

#include "ffcac/error.hpp"
#include "ffcac/rrc/rrc.hpp"
#include "ffcac/simd/kernels.hpp"

namespace ffcac::rrc {

Tensor prototype_fit(const Tensor& E, std::span<const std::size_t> labels, std::size_t classes) {
  if (E.rank() != 2 || labels.size() != E.rows()) throw DimensionError("prototype_fit: labels do not match rows");
  if (classes == 0) throw DimensionError("prototype_fit needs at least one class");
  const std::size_t D = E.cols();
  Tensor means({classes, D});
  std::vector<std::size_t> counts(classes, 0);
  for (std::size_t i = 0; i < E.rows(); ++i) {
    if (labels[i] >= classes) throw DimensionError("label index out of range");
    simd::axpy(1.0, E.data() + i * D, means.data() + labels[i] * D, D);
    ++counts[labels[i]];
  }
  for (std::size_t c = 0; c < classes; ++c) {
    if (counts[c] == 0) throw ProtocolError("class " + std::to_string(c) + " has no samples for its prototype");
    for (std::size_t j = 0; j < D; ++j) means(c, j) /= static_cast<double>(counts[c]);
  }
  return means;
}

Prediction prototype_predict(const Tensor& prototypes, std::span<const double> e) {
  return predict(prototypes.transposed(), e);
}

void Prototypes::add_classes(const Tensor& E, std::span<const std::size_t> labels,
                             std::span<const std::string> new_labels) {
  if (E.rank() != 2 || E.cols() != dim_) throw DimensionError("prototype embeddings have the wrong width");
  for (const auto& l : new_labels) {
    if (registry_.contains(l)) throw ProtocolError("label `" + l + "` is already registered");
  }
  const Tensor fresh = prototype_fit(E, labels, new_labels.size());
  const std::size_t old = registry_.size();
  Tensor grown({old + new_labels.size(), dim_});
  if (old > 0) std::copy(means_.data(), means_.data() + means_.size(), grown.data());
  std::copy(fresh.data(), fresh.data() + fresh.size(), grown.data() + old * dim_);
  means_ = std::move(grown);
  for (const auto& l : new_labels) registry_.add(l);
}

Prediction Prototypes::predict(std::span<const double> e) const {
  if (registry_.size() == 0) throw UsageError("no prototypes");
  return prototype_predict(means_, e);
}

}  // namespace ffcac::rrc
