#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ffcac/ad/tape.hpp"
#include "ffcac/container.hpp"
#include "ffcac/tensor.hpp"

namespace ffcac::rrc {

// ---- training head -------------------------------------------------------

// Cosine-softmax head used only while finetuning the extractor.
struct CosineHead {
  Tensor weight;  // N0 x D, one row per base class
  double eta = 16.0;

  // Rows ~ N(0, 1/D).
  static CosineHead init(std::size_t classes, std::size_t dim, double eta, std::uint64_t seed);
};

// eta * cos(e_i, w_j) for a B x D batch against N x D weights: B x N.
ad::Var cosine_logits(const ad::Var& embeddings, const ad::Var& weight, double eta);

// Mean over the batch of -log softmax(eta * cos)[true class]. NumericError on a
// zero-norm embedding or weight row.
ad::Var cosine_loss(const ad::Var& embeddings, const ad::Var& weight, std::span<const std::size_t> labels,
                    double eta);
double cosine_loss(const Tensor& embeddings, std::span<const std::size_t> labels, const CosineHead& head);

// ---- labels --------------------------------------------------------------

// Append-only label -> column index map.
class LabelRegistry {
 public:
  // ProtocolError if the label is already registered.
  std::size_t add(const std::string& label);
  std::optional<std::size_t> find(const std::string& label) const;
  // ProtocolError if absent.
  std::size_t index(const std::string& label) const;
  const std::string& label(std::size_t index) const { return labels_.at(index); }
  bool contains(const std::string& label) const { return map_.count(label) != 0; }
  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> map_;
};

// n x classes matrix with +1 at (i, labels[i]).
Tensor one_hot(std::span<const std::size_t> labels, std::size_t classes);

// ---- ridge regression classifier -----------------------------------------

struct Prediction {
  std::size_t index = 0;
  std::vector<double> scores;  // cosine to each class column
};

// Accumulated G = sum E^T E and C = sum E^T Y plus the label registry; the
// weights W = (G + lambda I)^-1 C are solved lazily and cached.
class ClassifierState {
 public:
  ClassifierState() = default;
  ClassifierState(std::size_t dim, double lambda);

  // E: n x D, Y: n x labels.size() one-hot. The state must be empty.
  void fit_base(const Tensor& E, const Tensor& Y, std::span<const std::string> labels);
  // Registers new_labels, pads C with zero columns, then accumulates.
  // Y_m columns correspond to new_labels. ProtocolError on a known label.
  void update_incremental(const Tensor& E_m, const Tensor& Y_m, std::span<const std::string> new_labels);

  // Cholesky solve with one jittered retry (1e-10 * trace(G) / D on the
  // diagonal); NumericError if G + lambda I is still not positive definite.
  const Tensor& solve_weights();
  Prediction predict(std::span<const double> e);

  void set_lambda(double lambda);
  double lambda() const { return lambda_; }
  std::size_t dim() const { return dim_; }
  std::size_t classes() const { return registry_.size(); }
  const Tensor& gram() const { return G_; }
  const Tensor& cross() const { return C_; }
  const LabelRegistry& registry() const { return registry_; }
  bool weights_cached() const { return cached_; }
  // True when the last solve needed diagonal jitter.
  bool jittered() const { return jittered_; }

  io::Container to_container() const;
  static ClassifierState from_container(const io::Container& c);

 private:
  void accumulate(const Tensor& E, const Tensor& Y, std::size_t first_column);

  std::size_t dim_ = 0;
  double lambda_ = 0.0;
  Tensor G_;
  Tensor C_;  // D x classes; empty while no classes are registered
  LabelRegistry registry_;
  Tensor W_;
  bool cached_ = false;
  bool jittered_ = false;
};

// Solves (A) X = B for symmetric positive definite A (D x D) and B (D x N) by
// Cholesky factorisation plus one step of iterative refinement. Returns
// nullopt if the factorisation breaks down.
std::optional<Tensor> spd_solve(const Tensor& A, const Tensor& B);

// argmax_j cos(e, W[:, j]); ties go to the lowest index. Zero-norm columns
// score 0. NumericError on a zero embedding.
Prediction predict(const Tensor& W, std::span<const double> e);

// ---- lambda selection ----------------------------------------------------

inline const std::vector<double> kDefaultLambdaGrid = {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3};

// Stratified k-fold cross-validation on held-out accuracy; ties prefer the
// smaller lambda. ProtocolError if a class has fewer samples than folds.
double select_lambda_cv(const Tensor& E, std::span<const std::size_t> labels, std::size_t classes,
                        std::span<const double> grid, std::size_t k_folds, std::uint64_t seed);

// ---- prototype baseline --------------------------------------------------

// Per-class mean embeddings scored by cosine.
class Prototypes {
 public:
  explicit Prototypes(std::size_t dim = 0) : dim_(dim) {}

  // Appends one prototype per new label (the mean of its rows in E).
  // ProtocolError on an empty class or a known label.
  void add_classes(const Tensor& E, std::span<const std::size_t> labels, std::span<const std::string> new_labels);
  Prediction predict(std::span<const double> e) const;

  const Tensor& means() const { return means_; }  // classes x D
  const LabelRegistry& registry() const { return registry_; }

 private:
  std::size_t dim_;
  Tensor means_;
  LabelRegistry registry_;
};

// Class means of E (rows) for labels in [0, classes). ProtocolError on an empty class.
Tensor prototype_fit(const Tensor& E, std::span<const std::size_t> labels, std::size_t classes);
Prediction prototype_predict(const Tensor& prototypes, std::span<const double> e);

}  // namespace ffcac::rrc
