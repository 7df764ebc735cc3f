#include <algorithm>
#include <cmath>
#include <string>

#include "ffcac/error.hpp"
#include "ffcac/rrc/rrc.hpp"
#include "ffcac/simd/kernels.hpp"

namespace ffcac::rrc {
namespace {

// Lower Cholesky factor of A, or nullopt when a pivot is not positive.
std::optional<Tensor> cholesky(const Tensor& A) {
  const std::size_t n = A.rows();
  Tensor L({n, n});
  for (std::size_t j = 0; j < n; ++j) {
    const double* lj = L.data() + j * n;
    const double d = A(j, j) - simd::dot(lj, lj, j);
    if (!(d > 0.0) || !std::isfinite(d)) return std::nullopt;
    const double ljj = std::sqrt(d);
    L(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      L(i, j) = (A(i, j) - simd::dot(L.data() + i * n, lj, j)) / ljj;
    }
  }
  return L;
}

// Solves L L^T x = b in place for each row b of Bt (N x n).
void cholesky_solve(const Tensor& L, const Tensor& Lt, Tensor& Bt) {
  const std::size_t n = L.rows();
  for (std::size_t r = 0; r < Bt.rows(); ++r) {
    double* x = Bt.data() + r * n;
    for (std::size_t i = 0; i < n; ++i) x[i] = (x[i] - simd::dot(L.data() + i * n, x, i)) / L(i, i);
    for (std::size_t i = n; i-- > 0;) {
      x[i] = (x[i] - simd::dot(Lt.data() + i * n + i + 1, x + i + 1, n - i - 1)) / L(i, i);
    }
  }
}

}  // namespace

std::optional<Tensor> spd_solve(const Tensor& A, const Tensor& B) {
  const std::size_t n = A.rows();
  if (A.cols() != n || B.rows() != n) {
    throw DimensionError("spd_solve: " + shape_string(A.shape()) + " against " + shape_string(B.shape()));
  }
  const auto L = cholesky(A);
  if (!L) return std::nullopt;
  const Tensor Lt = L->transposed();
  const Tensor Bt = B.transposed();
  Tensor Xt = Bt;
  cholesky_solve(*L, Lt, Xt);
  // One refinement step: X += solve(B - A X). Rows are right-hand sides.
  Tensor R(Bt.shape());
  simd::gemm(false, true, Xt.rows(), n, n, Xt.data(), A.data(), R.data(), false);
  for (std::size_t i = 0; i < R.size(); ++i) R[i] = Bt[i] - R[i];
  cholesky_solve(*L, Lt, R);
  for (std::size_t i = 0; i < Xt.size(); ++i) Xt[i] += R[i];
  return Xt.transposed();
}

ClassifierState::ClassifierState(std::size_t dim, double lambda) : dim_(dim), lambda_(lambda), G_({dim, dim}) {
  if (dim == 0) throw ConfigError("classifier dimension must be positive");
  if (!(lambda >= 0) || !std::isfinite(lambda)) throw ConfigError("classifier lambda must be finite and >= 0");
}

void ClassifierState::set_lambda(double lambda) {
  if (!(lambda >= 0) || !std::isfinite(lambda)) throw ConfigError("classifier lambda must be finite and >= 0");
  lambda_ = lambda;
  cached_ = false;
}

void ClassifierState::accumulate(const Tensor& E, const Tensor& Y, std::size_t first_column) {
  const std::size_t n = E.rows(), k = Y.cols(), N = C_.cols();
  simd::gemm(true, false, dim_, dim_, n, E.data(), E.data(), G_.data(), true);
  // E^T Y lands in columns [first_column, first_column + k) of C.
  Tensor EtY({dim_, k});
  simd::gemm(true, false, dim_, k, n, E.data(), Y.data(), EtY.data(), false);
  for (std::size_t i = 0; i < dim_; ++i) {
    for (std::size_t j = 0; j < k; ++j) C_.data()[i * N + first_column + j] += EtY(i, j);
  }
}

void ClassifierState::fit_base(const Tensor& E, const Tensor& Y, std::span<const std::string> labels) {
  if (registry_.size() != 0) throw ProtocolError("fit_base on a classifier that already has classes");
  update_incremental(E, Y, labels);
}

void ClassifierState::update_incremental(const Tensor& E_m, const Tensor& Y_m, std::span<const std::string> new_labels) {
  if (dim_ == 0) throw UsageError("classifier state is not initialised");
  const bool empty = E_m.empty();
  if (!empty) {
    if (E_m.rank() != 2 || E_m.cols() != dim_) {
      throw DimensionError("session embeddings " + shape_string(E_m.shape()) + " do not have " +
                           std::to_string(dim_) + " columns");
    }
    if (Y_m.rank() != 2 || Y_m.rows() != E_m.rows() || Y_m.cols() != new_labels.size()) {
      throw DimensionError("session targets " + shape_string(Y_m.shape()) + " do not match " +
                           std::to_string(E_m.rows()) + " samples x " + std::to_string(new_labels.size()) +
                           " new labels");
    }
    if (!E_m.all_finite()) throw NumericError("session embeddings contain non-finite values");
  }
  for (std::size_t i = 0; i < new_labels.size(); ++i) {
    if (registry_.contains(new_labels[i])) throw ProtocolError("label `" + new_labels[i] + "` is already registered");
    for (std::size_t j = 0; j < i; ++j) {
      if (new_labels[j] == new_labels[i]) throw ProtocolError("label `" + new_labels[i] + "` repeated in session");
    }
  }
  const std::size_t old = registry_.size();
  for (const auto& l : new_labels) registry_.add(l);
  if (!new_labels.empty()) {
    Tensor padded({dim_, registry_.size()});
    for (std::size_t i = 0; i < dim_; ++i) {
      for (std::size_t j = 0; j < old; ++j) padded(i, j) = C_(i, j);
    }
    C_ = std::move(padded);
  }
  if (!empty) accumulate(E_m, Y_m, old);
  cached_ = false;
}

const Tensor& ClassifierState::solve_weights() {
  if (cached_) return W_;
  if (registry_.size() == 0) throw UsageError("no classes registered");
  Tensor A = G_;
  for (std::size_t i = 0; i < dim_; ++i) A(i, i) += lambda_;
  jittered_ = false;
  auto W = spd_solve(A, C_);
  if (!W) {
    double trace = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) trace += G_(i, i);
    const double jitter = 1e-10 * trace / static_cast<double>(dim_);
    for (std::size_t i = 0; i < dim_; ++i) A(i, i) += jitter;
    W = spd_solve(A, C_);
    jittered_ = true;
  }
  // A jittered solution is only accepted if it still solves the unjittered
  // system; for a singular G with lambda = 0 that holds when C lies in G's range.
  if (W && jittered_) {
    Tensor R = C_;
    simd::gemm(false, false, dim_, C_.cols(), dim_, G_.data(), W->data(), R.data(), false);
    double worst = 0.0;
    for (std::size_t i = 0; i < R.size(); ++i) {
      worst = std::max(worst, std::abs(R[i] + lambda_ * (*W)[i] - C_[i]));
    }
    if (!(worst <= 1e-8 * (1.0 + C_.max_abs()))) W.reset();
  }
  if (!W || !W->all_finite()) {
    throw NumericError("G + lambda*I is not positive definite (lambda = " + std::to_string(lambda_) +
                       "); use lambda > 0");
  }
  W_ = std::move(*W);
  cached_ = true;
  return W_;
}

Prediction ClassifierState::predict(std::span<const double> e) { return rrc::predict(solve_weights(), e); }

Prediction predict(const Tensor& W, std::span<const double> e) {
  const std::size_t D = W.rows(), N = W.cols();
  if (e.size() != D) {
    throw DimensionError("embedding of length " + std::to_string(e.size()) + " against weights " +
                         shape_string(W.shape()));
  }
  const double en = std::sqrt(simd::dot(e.data(), e.data(), D));
  if (!(en > 0.0)) throw NumericError("cannot classify a zero embedding");
  const Tensor Wt = W.transposed();
  Prediction p;
  p.scores.resize(N);
  for (std::size_t j = 0; j < N; ++j) {
    const double* w = Wt.data() + j * D;
    const double wn = std::sqrt(simd::dot(w, w, D));
    p.scores[j] = wn > 0.0 ? simd::dot(w, e.data(), D) / (wn * en) : 0.0;
    if (p.scores[j] > p.scores[p.index]) p.index = j;
  }
  return p;
}

io::Container ClassifierState::to_container() const {
  io::Container c;
  c.tensors.push_back({"rrc.G", G_, io::DType::kF64});
  if (!C_.empty()) c.tensors.push_back({"rrc.C", C_, io::DType::kF64});
  c.tensors.push_back({"rrc.lambda", Tensor::scalar(lambda_), io::DType::kF64});
  c.labels = registry_.labels();
  return c;
}

ClassifierState ClassifierState::from_container(const io::Container& c) {
  const io::NamedTensor* g = c.find("rrc.G");
  const io::NamedTensor* lam = c.find("rrc.lambda");
  const io::NamedTensor* cc = c.find("rrc.C");
  if (!g || !lam) throw LoadError(LoadFailure::kMissingTensor, "classifier container needs rrc.G and rrc.lambda");
  if (g->value.rank() != 2 || g->value.rows() != g->value.cols() || lam->value.size() != 1) {
    throw LoadError(LoadFailure::kShapeMismatch, "rrc.G must be square and rrc.lambda a scalar");
  }
  ClassifierState s(g->value.rows(), lam->value[0]);
  s.G_ = g->value;
  for (const auto& l : c.labels) s.registry_.add(l);
  if (!c.labels.empty()) {
    if (!cc || cc->value.shape() != Shape{s.dim_, c.labels.size()}) {
      throw LoadError(LoadFailure::kShapeMismatch, "rrc.C must be D x label_count");
    }
    s.C_ = cc->value;
  }
  return s;
}

}  // namespace ffcac::rrc
