#include "ffcac/error.hpp"
#include "ffcac/rrc/rrc.hpp"

namespace ffcac::rrc {

std::size_t LabelRegistry::add(const std::string& label) {
  if (map_.count(label)) throw ProtocolError("label `" + label + "` is already registered");
  const std::size_t index = labels_.size();
  labels_.push_back(label);
  map_.emplace(label, index);
  return index;
}

std::optional<std::size_t> LabelRegistry::find(const std::string& label) const {
  const auto it = map_.find(label);
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

std::size_t LabelRegistry::index(const std::string& label) const {
  const auto it = map_.find(label);
  if (it == map_.end()) throw ProtocolError("label `" + label + "` is not registered");
  return it->second;
}

Tensor one_hot(std::span<const std::size_t> labels, std::size_t classes) {
  if (labels.empty() || classes == 0) throw DimensionError("one_hot needs at least one label and one class");
  Tensor y({labels.size(), classes});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes) {
      throw DimensionError("label index " + std::to_string(labels[i]) + " out of range for " +
                           std::to_string(classes) + " classes");
    }
    y(i, labels[i]) = 1.0;
  }
  return y;
}

}  // namespace ffcac::rrc
