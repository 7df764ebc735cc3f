#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ffcac/ad/tape.hpp"

// Differentiable primitives. Inputs must share a tape; results land on it.
// Axis arguments accept negative values counted from the last axis.
namespace ffcac::ad {

inline constexpr double kLayerNormEps = 1e-5;

Var matmul(const Var& a, const Var& b);

// Elementwise. b may equal a's shape, or be a row vector ([n] or [1 x n])
// broadcast over every row of a matrix a.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double factor);

Var relu(const Var& x);
// tanh approximation: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))
Var gelu(const Var& x);
Var exp(const Var& x);
// NumericError on non-positive input.
Var log(const Var& x);

Var transpose(const Var& x);
Var concat(std::span<const Var> parts, int axis);
Var slice(const Var& x, int axis, std::size_t begin, std::size_t length);

// Reductions keep the reduced axis with extent 1.
Var mean(const Var& x, int axis);
// Sum of all elements, shape [1].
Var sum(const Var& x);

// Zero mean, unit variance along axis; no affine part.
Var layer_norm(const Var& x, int axis, double eps = kLayerNormEps);
Var softmax(const Var& x, int axis);
// x / ||x|| along axis. NumericError on a zero-norm slice.
Var l2_normalize(const Var& x, int axis);

// Mean over rows of -log softmax(logits)[row, label]. Shape [1].
Var cross_entropy(const Var& logits, std::span<const std::size_t> labels);

// p <- p - lr * (g + weight_decay * p)
void sgd_step(Tensor& param, const Tensor& grad, double lr, double weight_decay);

}  // namespace ffcac::ad
