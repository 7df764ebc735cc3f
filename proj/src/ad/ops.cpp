#include "ffcac/ad/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ffcac/error.hpp"
#include "ffcac/simd/kernels.hpp"

namespace ffcac::ad {

namespace {

struct AxisSplit {
  std::size_t outer = 1;
  std::size_t n = 1;
  std::size_t inner = 1;
  std::size_t axis = 0;
};

AxisSplit split_axis(const Shape& shape, int axis, const char* op) {
  const int rank = static_cast<int>(shape.size());
  const int a = axis < 0 ? axis + rank : axis;
  if (a < 0 || a >= rank) {
    throw DimensionError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for shape " +
                         shape_string(shape));
  }
  AxisSplit s;
  s.axis = static_cast<std::size_t>(a);
  for (std::size_t i = 0; i < s.axis; ++i) s.outer *= shape[i];
  s.n = shape[s.axis];
  for (std::size_t i = s.axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

enum class Broadcast { kNone, kRow };

Broadcast broadcast_kind(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return Broadcast::kNone;
  const bool row_vector = (b.rank() == 1) || (b.rank() == 2 && b.shape()[0] == 1);
  if (a.rank() == 2 && row_vector && b.size() == a.shape()[1]) return Broadcast::kRow;
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape_string(a.shape()) + " and " +
                       shape_string(b.shape()));
}

template <class F>
Tensor map(const Tensor& x, F f) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return out;
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.shape()[1] != bv.shape()[0]) {
    throw DimensionError("matmul: cannot multiply " + shape_string(av.shape()) + " by " +
                         shape_string(bv.shape()));
  }
  const std::size_t m = av.shape()[0], k = av.shape()[1], n = bv.shape()[1];
  Tensor out({m, n});
  simd::gemm(false, false, m, n, k, av.data(), bv.data(), out.data(), false);
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record("matmul", std::move(out), {a, b}, [ia, ib, m, k, n](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_buffer(ia)) {
      simd::gemm(false, true, m, k, n, g.data(), t.value_of(ib).data(), ga->data(), true);
    }
    if (Tensor* gb = t.grad_buffer(ib)) {
      simd::gemm(true, false, k, n, m, t.value_of(ia).data(), g.data(), gb->data(), true);
    }
  });
}

Var add(const Var& a, const Var& b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const Broadcast kind = broadcast_kind(av, bv, "add");
  Tensor out = av;
  const std::size_t width = bv.size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += kind == Broadcast::kNone ? bv[i] : bv[i % width];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record("add", std::move(out), {a, b}, [ia, ib, kind, width](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_buffer(ia)) simd::axpy(1.0, g.data(), ga->data(), g.size());
    if (Tensor* gb = t.grad_buffer(ib)) {
      if (kind == Broadcast::kNone) {
        simd::axpy(1.0, g.data(), gb->data(), g.size());
      } else {
        for (std::size_t r = 0; r < g.size() / width; ++r) simd::axpy(1.0, g.data() + r * width, gb->data(), width);
      }
    }
  });
}

Var sub(const Var& a, const Var& b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const Broadcast kind = broadcast_kind(av, bv, "sub");
  Tensor out = av;
  const std::size_t width = bv.size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= kind == Broadcast::kNone ? bv[i] : bv[i % width];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record("sub", std::move(out), {a, b}, [ia, ib, kind, width](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_buffer(ia)) simd::axpy(1.0, g.data(), ga->data(), g.size());
    if (Tensor* gb = t.grad_buffer(ib)) {
      if (kind == Broadcast::kNone) {
        simd::axpy(-1.0, g.data(), gb->data(), g.size());
      } else {
        for (std::size_t r = 0; r < g.size() / width; ++r) simd::axpy(-1.0, g.data() + r * width, gb->data(), width);
      }
    }
  });
}

Var mul(const Var& a, const Var& b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const Broadcast kind = broadcast_kind(av, bv, "mul");
  Tensor out = av;
  const std::size_t width = bv.size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= kind == Broadcast::kNone ? bv[i] : bv[i % width];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record("mul", std::move(out), {a, b}, [ia, ib, kind, width](Tape& t, const Tensor& g) {
    const Tensor& x = t.value_of(ia);
    const Tensor& y = t.value_of(ib);
    const bool bcast = kind == Broadcast::kRow;
    if (Tensor* ga = t.grad_buffer(ia)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * (bcast ? y[i % width] : y[i]);
    }
    if (Tensor* gb = t.grad_buffer(ib)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[bcast ? i % width : i] += g[i] * x[i];
    }
  });
}

Var scale(const Var& a, double factor) {
  Tensor out = a.value();
  for (auto& v : out.values()) v *= factor;
  const std::size_t ia = a.id();
  return a.tape().record("scale", std::move(out), {a}, [ia, factor](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_buffer(ia)) simd::axpy(factor, g.data(), ga->data(), g.size());
  });
}

Var relu(const Var& x) {
  Tensor out = map(x.value(), [](double v) { return v > 0.0 ? v : 0.0; });
  const std::size_t ix = x.id();
  return x.tape().record("relu", std::move(out), {x}, [ix](Tape& t, const Tensor& g) {
    Tensor* gx = t.grad_buffer(ix);
    const Tensor& xv = t.value_of(ix);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (xv[i] > 0.0) (*gx)[i] += g[i];
  });
}

namespace {

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

}  // namespace

Var gelu(const Var& x) {
  Tensor out = map(x.value(), [](double v) {
    return 0.5 * v * (1.0 + std::tanh(kGeluC * (v + kGeluA * v * v * v)));
  });
  const std::size_t ix = x.id();
  return x.tape().record("gelu", std::move(out), {x}, [ix](Tape& t, const Tensor& g) {
    Tensor* gx = t.grad_buffer(ix);
    const Tensor& xv = t.value_of(ix);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double v = xv[i];
      const double th = std::tanh(kGeluC * (v + kGeluA * v * v * v));
      const double d = 0.5 * (1.0 + th) + 0.5 * v * (1.0 - th * th) * kGeluC * (1.0 + 3.0 * kGeluA * v * v);
      (*gx)[i] += g[i] * d;
    }
  });
}

Var exp(const Var& x) {
  Tensor out = map(x.value(), [](double v) { return std::exp(v); });
  const std::size_t ix = x.id();
  Tape& tape = x.tape();
  const std::size_t iy = tape.size();
  return tape.record("exp", std::move(out), {x}, [ix, iy](Tape& t, const Tensor& g) {
    Tensor* gx = t.grad_buffer(ix);
    const Tensor& y = t.value_of(iy);
    for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i] * y[i];
  });
}

Var log(const Var& x) {
  const Tensor& xv = x.value();
  for (double v : xv.values()) {
    if (!(v > 0.0)) throw NumericError("log of non-positive value " + std::to_string(v));
  }
  Tensor out = map(xv, [](double v) { return std::log(v); });
  const std::size_t ix = x.id();
  return x.tape().record("log", std::move(out), {x}, [ix](Tape& t, const Tensor& g) {
    Tensor* gx = t.grad_buffer(ix);
    const Tensor& v = t.value_of(ix);
    for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i] / v[i];
  });
}

Var transpose(const Var& x) {
  Tensor out = x.value().transposed();
  const std::size_t ix = x.id();
  return x.tape().record("transpose", std::move(out), {x}, [ix](Tape& t, const Tensor& g) {
    Tensor* gx = t.grad_buffer(ix);
    const std::size_t r = g.shape()[0], c = g.shape()[1];
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) (*gx)(j, i) += g(i, j);
  });
}

Var concat(std::span<const Var> parts, int axis) {
  if (parts.empty()) throw UsageError("concat of zero tensors");
  const Shape& first = parts[0].shape();
  const AxisSplit s0 = split_axis(first, axis, "concat");
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    const Shape& sh = p.shape();
    bool ok = sh.size() == first.size();
    for (std::size_t d = 0; ok && d < sh.size(); ++d)
      if (d != s0.axis && sh[d] != first[d]) ok = false;
    if (!ok) {
      throw DimensionError("concat: shape " + shape_string(sh) + " does not match " + shape_string(first) +
                           " off axis " + std::to_string(s0.axis));
    }
    widths.push_back(sh[s0.axis]);
    total += sh[s0.axis];
  }
  Shape out_shape = first;
  out_shape[s0.axis] = total;
  Tensor out(out_shape);
  const std::size_t inner = s0.inner, outer = s0.outer;
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const Tensor& v = parts[p].value();
    const std::size_t w = widths[p] * inner;
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(v.data() + o * w, w, out.data() + o * total * inner + offset * inner);
    offset += widths[p];
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  std::vector<std::size_t> ids;
  for (const auto& p : parts) ids.push_back(p.id());
  return parts[0].tape().record("concat", std::move(out), inputs,
                                [ids, widths, inner, outer, total](Tape& t, const Tensor& g) {
                                  std::size_t off = 0;
                                  for (std::size_t p = 0; p < ids.size(); ++p) {
                                    const std::size_t w = widths[p] * inner;
                                    if (Tensor* gp = t.grad_buffer(ids[p])) {
                                      for (std::size_t o = 0; o < outer; ++o)
                                        simd::axpy(1.0, g.data() + o * total * inner + off * inner,
                                                   gp->data() + o * w, w);
                                    }
                                    off += widths[p];
                                  }
                                });
}

Var slice(const Var& x, int axis, std::size_t begin, std::size_t length) {
  const Shape& sh = x.shape();
  const AxisSplit s = split_axis(sh, axis, "slice");
  if (length == 0 || begin + length > s.n) {
    throw DimensionError("slice: range [" + std::to_string(begin) + ", " + std::to_string(begin + length) +
                         ") outside axis of extent " + std::to_string(s.n));
  }
  Shape out_shape = sh;
  out_shape[s.axis] = length;
  Tensor out(out_shape);
  const Tensor& v = x.value();
  const std::size_t w = length * s.inner;
  for (std::size_t o = 0; o < s.outer; ++o)
    std::copy_n(v.data() + (o * s.n + begin) * s.inner, w, out.data() + o * w);
  const std::size_t ix = x.id();
  return x.tape().record("slice", std::move(out), {x}, [ix, s, begin, w](Tape& t, const Tensor& g) {
    Tensor* gx = t.grad_buffer(ix);
    for (std::size_t o = 0; o < s.outer; ++o)
      simd::axpy(1.0, g.data() + o * w, gx->data() + (o * s.n + begin) * s.inner, w);
  });
}

Var mean(const Var& x, int axis) {
  const Shape& sh = x.shape();
  const AxisSplit s = split_axis(sh, axis, "mean");
  Shape out_shape = sh;
  out_shape[s.axis] = 1;
  Tensor out(out_shape);
  const Tensor& v = x.value();
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t j = 0; j < s.n; ++j)
      for (std::size_t i = 0; i < s.inner; ++i) out[o * s.inner + i] += v[(o * s.n + j) * s.inner + i];
  const double inv = 1.0 / static_cast<double>(s.n);
  for (auto& e : out.values()) e *= inv;
  const std::size_t ix = x.id();
  return x.tape().record("mean", std::move(out), {x}, [ix, s, inv](Tape& t, const Tensor& g) {
    Tensor* gx = t.grad_buffer(ix);
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t j = 0; j < s.n; ++j)
        for (std::size_t i = 0; i < s.inner; ++i) (*gx)[(o * s.n + j) * s.inner + i] += g[o * s.inner + i] * inv;
  });
}

Var sum(const Var& x) {
  double total = 0.0;
  for (double v : x.value().values()) total += v;
  const std::size_t ix = x.id();
  return x.tape().record("sum", Tensor::scalar(total), {x}, [ix](Tape& t, const Tensor& g) {
    Tensor* gx = t.grad_buffer(ix);
    for (auto& e : gx->values()) e += g[0];
  });
}

Var layer_norm(const Var& x, int axis, double eps) {
  if (!(eps > 0.0)) throw UsageError("layer_norm: eps must be positive");
  const Shape& sh = x.shape();
  const AxisSplit s = split_axis(sh, axis, "layer_norm");
  const Tensor& v = x.value();
  Tensor out(sh);
  std::vector<double> inv_std(s.outer * s.inner);
  const double inv_n = 1.0 / static_cast<double>(s.n);
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      auto at = [&](std::size_t j) { return (o * s.n + j) * s.inner + i; };
      double mu = 0.0;
      for (std::size_t j = 0; j < s.n; ++j) mu += v[at(j)];
      mu *= inv_n;
      double var = 0.0;
      for (std::size_t j = 0; j < s.n; ++j) var += (v[at(j)] - mu) * (v[at(j)] - mu);
      var *= inv_n;
      const double r = 1.0 / std::sqrt(var + eps);
      inv_std[o * s.inner + i] = r;
      for (std::size_t j = 0; j < s.n; ++j) out[at(j)] = (v[at(j)] - mu) * r;
    }
  }
  const std::size_t ix = x.id();
  Tape& tape = x.tape();
  const std::size_t iy = tape.size();
  return tape.record("layer_norm", std::move(out), {x},
                     [ix, iy, s, inv_n, inv_std = std::move(inv_std)](Tape& t, const Tensor& g) {
                       Tensor* gx = t.grad_buffer(ix);
                       const Tensor& y = t.value_of(iy);
                       for (std::size_t o = 0; o < s.outer; ++o) {
                         for (std::size_t i = 0; i < s.inner; ++i) {
                           auto at = [&](std::size_t j) { return (o * s.n + j) * s.inner + i; };
                           double mg = 0.0, mgy = 0.0;
                           for (std::size_t j = 0; j < s.n; ++j) {
                             mg += g[at(j)];
                             mgy += g[at(j)] * y[at(j)];
                           }
                           mg *= inv_n;
                           mgy *= inv_n;
                           const double r = inv_std[o * s.inner + i];
                           for (std::size_t j = 0; j < s.n; ++j) (*gx)[at(j)] += r * (g[at(j)] - mg - y[at(j)] * mgy);
                         }
                       }
                     });
}

Var softmax(const Var& x, int axis) {
  const Shape& sh = x.shape();
  const AxisSplit s = split_axis(sh, axis, "softmax");
  const Tensor& v = x.value();
  Tensor out(sh);
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      auto at = [&](std::size_t j) { return (o * s.n + j) * s.inner + i; };
      double mx = v[at(0)];
      for (std::size_t j = 1; j < s.n; ++j) mx = std::max(mx, v[at(j)]);
      double z = 0.0;
      for (std::size_t j = 0; j < s.n; ++j) {
        out[at(j)] = std::exp(v[at(j)] - mx);
        z += out[at(j)];
      }
      for (std::size_t j = 0; j < s.n; ++j) out[at(j)] /= z;
    }
  }
  const std::size_t ix = x.id();
  Tape& tape = x.tape();
  const std::size_t iy = tape.size();
  return tape.record("softmax", std::move(out), {x}, [ix, iy, s](Tape& t, const Tensor& g) {
    Tensor* gx = t.grad_buffer(ix);
    const Tensor& y = t.value_of(iy);
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t i = 0; i < s.inner; ++i) {
        auto at = [&](std::size_t j) { return (o * s.n + j) * s.inner + i; };
        double gy = 0.0;
        for (std::size_t j = 0; j < s.n; ++j) gy += g[at(j)] * y[at(j)];
        for (std::size_t j = 0; j < s.n; ++j) (*gx)[at(j)] += y[at(j)] * (g[at(j)] - gy);
      }
    }
  });
}

Var l2_normalize(const Var& x, int axis) {
  const Shape& sh = x.shape();
  const AxisSplit s = split_axis(sh, axis, "l2_normalize");
  const Tensor& v = x.value();
  Tensor out(sh);
  std::vector<double> norms(s.outer * s.inner);
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      auto at = [&](std::size_t j) { return (o * s.n + j) * s.inner + i; };
      double ss = 0.0;
      for (std::size_t j = 0; j < s.n; ++j) ss += v[at(j)] * v[at(j)];
      const double nrm = std::sqrt(ss);
      if (!(nrm > 0.0)) throw NumericError("l2_normalize: zero-norm vector");
      norms[o * s.inner + i] = nrm;
      for (std::size_t j = 0; j < s.n; ++j) out[at(j)] = v[at(j)] / nrm;
    }
  }
  const std::size_t ix = x.id();
  Tape& tape = x.tape();
  const std::size_t iy = tape.size();
  return tape.record("l2_normalize", std::move(out), {x},
                     [ix, iy, s, norms = std::move(norms)](Tape& t, const Tensor& g) {
                       Tensor* gx = t.grad_buffer(ix);
                       const Tensor& y = t.value_of(iy);
                       for (std::size_t o = 0; o < s.outer; ++o) {
                         for (std::size_t i = 0; i < s.inner; ++i) {
                           auto at = [&](std::size_t j) { return (o * s.n + j) * s.inner + i; };
                           double gy = 0.0;
                           for (std::size_t j = 0; j < s.n; ++j) gy += g[at(j)] * y[at(j)];
                           const double r = 1.0 / norms[o * s.inner + i];
                           for (std::size_t j = 0; j < s.n; ++j) (*gx)[at(j)] += r * (g[at(j)] - y[at(j)] * gy);
                         }
                       }
                     });
}

Var cross_entropy(const Var& logits, std::span<const std::size_t> labels) {
  const Tensor& z = logits.value();
  if (z.rank() != 2 || z.shape()[0] != labels.size()) {
    throw DimensionError("cross_entropy: logits " + shape_string(z.shape()) + " vs " +
                         std::to_string(labels.size()) + " labels");
  }
  const std::size_t b = z.shape()[0], n = z.shape()[1];
  Tensor probs({b, n});
  double loss = 0.0;
  for (std::size_t r = 0; r < b; ++r) {
    if (labels[r] >= n) throw DimensionError("cross_entropy: label " + std::to_string(labels[r]) + " out of range");
    std::size_t top = 0;
    for (std::size_t j = 1; j < n; ++j)
      if (z(r, j) > z(r, top)) top = j;
    const double mx = z(r, top);
    // log-sum-exp as mx + log1p(sum of the non-max terms) keeps precision when
    // one class dominates.
    double rest = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      probs(r, j) = std::exp(z(r, j) - mx);
      if (j != top) rest += probs(r, j);
    }
    for (std::size_t j = 0; j < n; ++j) probs(r, j) /= 1.0 + rest;
    loss += (mx - z(r, labels[r])) + std::log1p(rest);
  }
  loss /= static_cast<double>(b);
  std::vector<std::size_t> lab(labels.begin(), labels.end());
  const std::size_t il = logits.id();
  return logits.tape().record("cross_entropy", Tensor::scalar(loss), {logits},
                              [il, b, n, probs = std::move(probs), lab = std::move(lab)](Tape& t, const Tensor& g) {
                                Tensor* gz = t.grad_buffer(il);
                                const double w = g[0] / static_cast<double>(b);
                                for (std::size_t r = 0; r < b; ++r)
                                  for (std::size_t j = 0; j < n; ++j)
                                    (*gz)(r, j) += w * (probs(r, j) - (j == lab[r] ? 1.0 : 0.0));
                              });
}

void sgd_step(Tensor& param, const Tensor& grad, double lr, double weight_decay) {
  if (!(lr > 0.0)) throw UsageError("sgd_step: learning rate must be positive");
  require_same_shape(param, grad, "sgd_step");
  for (std::size_t i = 0; i < param.size(); ++i) param[i] -= lr * (grad[i] + weight_decay * param[i]);
}

}  // namespace ffcac::ad
