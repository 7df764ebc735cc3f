#include <algorithm>
#include <string>

#include "ffcac/error.hpp"
#include "ffcac/rng.hpp"
#include "ffcac/rrc/rrc.hpp"

namespace ffcac::rrc {

double select_lambda_cv(const Tensor& E, std::span<const std::size_t> labels, std::size_t classes,
                        std::span<const double> grid, std::size_t k_folds, std::uint64_t seed) {
  if (grid.empty()) throw ConfigError("lambda grid is empty");
  if (k_folds < 2) throw ConfigError("cross-validation needs at least 2 folds");
  const std::size_t n = E.rows(), D = E.cols();
  if (labels.size() != n) throw DimensionError("label count differs from embedding rows");
  if (n < k_folds) throw ProtocolError("cannot split " + std::to_string(n) + " samples into " +
                                       std::to_string(k_folds) + " folds");

  // Stratified assignment: each class's samples are shuffled and dealt round-robin.
  std::vector<std::vector<std::size_t>> by_class(classes);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] >= classes) throw DimensionError("label index out of range");
    by_class[labels[i]].push_back(i);
  }
  std::vector<std::size_t> fold(n);
  Rng rng(seed);
  for (std::size_t c = 0; c < classes; ++c) {
    auto& items = by_class[c];
    if (items.size() < k_folds) {
      throw ProtocolError("class " + std::to_string(c) + " has " + std::to_string(items.size()) +
                          " samples, fewer than " + std::to_string(k_folds) + " folds");
    }
    rng.shuffle(items);
    for (std::size_t j = 0; j < items.size(); ++j) fold[items[j]] = j % k_folds;
  }

  std::vector<std::string> names(classes);
  for (std::size_t c = 0; c < classes; ++c) names[c] = std::to_string(c);

  double best_lambda = grid[0];
  double best_acc = -1.0;
  std::vector<double> sorted(grid.begin(), grid.end());
  std::sort(sorted.begin(), sorted.end());
  for (double lambda : sorted) {
    double acc_sum = 0.0;
    for (std::size_t f = 0; f < k_folds; ++f) {
      std::vector<std::size_t> train, test;
      for (std::size_t i = 0; i < n; ++i) (fold[i] == f ? test : train).push_back(i);
      Tensor Et({train.size(), D});
      std::vector<std::size_t> yt;
      for (std::size_t r = 0; r < train.size(); ++r) {
        std::copy_n(E.data() + train[r] * D, D, Et.data() + r * D);
        yt.push_back(labels[train[r]]);
      }
      ClassifierState s(D, lambda);
      s.fit_base(Et, one_hot(yt, classes), names);
      const Tensor& W = s.solve_weights();
      std::size_t correct = 0;
      for (std::size_t i : test) correct += predict(W, E.row(i)).index == labels[i];
      acc_sum += static_cast<double>(correct) / static_cast<double>(test.size());
    }
    const double acc = acc_sum / static_cast<double>(k_folds);
    if (acc > best_acc) {
      best_acc = acc;
      best_lambda = lambda;
    }
  }
  return best_lambda;
}

}  // namespace ffcac::rrc
