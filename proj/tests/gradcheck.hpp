#pragma once

// Central finite-difference oracle. Touches only forward evaluation, never the
// backward closures it is used to check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "ffcac/tensor.hpp"

namespace ffcac::testing {

using ScalarFn = std::function<double(const std::vector<Tensor>&)>;

inline Tensor numeric_grad(const ScalarFn& f, std::vector<Tensor> inputs, std::size_t which, double h = 1e-5) {
  Tensor g(inputs[which].shape());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double saved = inputs[which][i];
    inputs[which][i] = saved + h;
    const double up = f(inputs);
    inputs[which][i] = saved - h;
    const double down = f(inputs);
    inputs[which][i] = saved;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// Norm-wise relative error max|a - n| / max(max|a|, max|n|); 0 when both vanish.
inline double relative_error(const Tensor& analytic, const Tensor& numeric) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
    scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
  }
  return scale == 0.0 ? 0.0 : diff / scale;
}

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  return scale == 0.0 ? 0.0 : std::abs(analytic - numeric) / scale;
}

}  // namespace ffcac::testing
