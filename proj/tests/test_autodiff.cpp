#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "ffcac/ad/ops.hpp"
#include "ffcac/error.hpp"
#include "ffcac/rng.hpp"
#include "gradcheck.hpp"

using namespace ffcac;
using ffcac::testing::numeric_grad;
using ffcac::testing::relative_error;

namespace {

Tensor random_tensor(Rng& rng, Shape shape, double lo = -2.0, double hi = 2.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

using Builder = std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;

// Loss = sum(out * probe) with a fixed random probe, so upstream gradients are
// not all ones. Returns the worst relative error over all inputs.
double check_builder(const Builder& build, const std::vector<Tensor>& inputs, std::uint64_t seed) {
  Tensor probe;
  {
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (const auto& t : inputs) vars.push_back(tape.constant(t));
    Rng rng(seed);
    probe = random_tensor(rng, build(tape, vars).shape(), -1.0, 1.0);
  }
  auto forward = [&](const std::vector<Tensor>& xs) {
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (const auto& t : xs) vars.push_back(tape.constant(t));
    auto out = build(tape, vars);
    return ad::sum(ad::mul(out, tape.constant(probe))).value()[0];
  };
  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (const auto& t : inputs) vars.push_back(tape.parameter(t));
  auto loss = ad::sum(ad::mul(build(tape, vars), tape.constant(probe)));
  tape.backward(loss);
  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    worst = std::max(worst, relative_error(vars[i].grad(), numeric_grad(forward, inputs, i)));
  }
  return worst;
}

}  // namespace

TEST_CASE("matmul worked examples") {
  ad::Tape tape;
  auto a = tape.constant(Tensor::matrix(2, 2, {1, 2, 3, 4}));
  auto ones = tape.constant(Tensor::matrix(2, 1, {1, 1}));
  CHECK(ad::matmul(a, ones).value() == Tensor::matrix(2, 1, {3, 7}));
  CHECK(ad::matmul(tape.constant(Tensor::identity(2)), a).value() == a.value());
  auto zero = tape.constant(Tensor({3, 2}));
  CHECK(ad::matmul(zero, a).value() == Tensor({3, 2}));
}

TEST_CASE("matmul shape mismatch names both shapes") {
  ad::Tape tape;
  auto a = tape.constant(Tensor({2, 3}));
  auto b = tape.constant(Tensor({2, 3}));
  try {
    (void)ad::matmul(a, b);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    CHECK(std::string(e.what()).find("[2x3]") != std::string::npos);
  }
}

TEST_CASE("elementwise worked examples") {
  ad::Tape tape;
  auto s = ad::softmax(tape.constant(Tensor::vector({0, 0, 0})), 0).value();
  for (double v : s.values()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  auto ln = ad::layer_norm(tape.constant(Tensor::vector({4, 4, 4, 4})), 0).value();
  for (double v : ln.values()) CHECK(v == 0.0);

  CHECK(ad::relu(tape.constant(Tensor::vector({-1, 2}))).value() == Tensor::vector({0, 2}));

  auto cat = ad::concat(std::vector{tape.constant(Tensor::matrix(1, 2, {1, 2})), tape.constant(Tensor::matrix(1, 1, {3}))}, 1);
  CHECK(cat.value() == Tensor::matrix(1, 3, {1, 2, 3}));
  CHECK(ad::mean(tape.constant(Tensor::matrix(2, 2, {1, 2, 3, 4})), 0).value() == Tensor::matrix(1, 2, {2, 3}));
}

TEST_CASE("axis out of range is a dimension error") {
  ad::Tape tape;
  auto x = tape.constant(Tensor({2, 2}));
  CHECK_THROWS_AS(ad::softmax(x, 2), DimensionError);
  CHECK_THROWS_AS(ad::mean(x, -3), DimensionError);
  CHECK_THROWS_AS(ad::layer_norm(x, 5), DimensionError);
  CHECK_THROWS_AS(ad::concat(std::vector{x, x}, 3), DimensionError);
}

TEST_CASE("numeric domain errors") {
  ad::Tape tape;
  CHECK_THROWS_AS(ad::log(tape.constant(Tensor::vector({1.0, 0.0}))), NumericError);
  CHECK_THROWS_AS(ad::l2_normalize(tape.constant(Tensor::matrix(1, 2, {0, 0})), 1), NumericError);
  CHECK_THROWS_AS(ad::exp(tape.constant(Tensor::vector({1000.0}))), NumericError);
}

TEST_CASE("backward worked examples") {
  ad::Tape tape;
  auto x = tape.parameter(Tensor({2, 3}, 0.5));
  tape.backward(ad::sum(x));
  CHECK(x.grad() == Tensor({2, 3}, 1.0));

  ad::Tape t2;
  auto v = t2.parameter(Tensor::vector({1, 2}));
  t2.backward(ad::sum(ad::mul(v, v)));
  CHECK(v.grad() == Tensor::vector({2, 4}));
}

TEST_CASE("backward preconditions") {
  ad::Tape empty;
  ad::Tape other;
  auto foreign = other.parameter(Tensor::scalar(1.0));
  CHECK_THROWS_AS(empty.backward(foreign), UsageError);

  ad::Tape tape;
  auto x = tape.parameter(Tensor({2, 2}, 1.0));
  CHECK_THROWS_AS(tape.backward(x), UsageError);
  CHECK_THROWS_AS((void)x.grad(), UsageError);
}

TEST_CASE("every primitive matches central differences to 1e-6") {
  Rng rng(2024);
  auto m23 = [&] { return random_tensor(rng, {2, 3}); };
  auto m34 = [&] { return random_tensor(rng, {3, 4}); };
  auto row3 = [&] { return random_tensor(rng, {1, 3}); };
  using V = std::vector<ad::Var>;
  struct Case {
    const char* name;
    Builder build;
    std::vector<Tensor> inputs;
  };
  std::vector<Case> cases = {
      {"matmul", [](ad::Tape&, const V& v) { return ad::matmul(v[0], v[1]); }, {m23(), m34()}},
      {"add", [](ad::Tape&, const V& v) { return ad::add(v[0], v[1]); }, {m23(), m23()}},
      {"add row broadcast", [](ad::Tape&, const V& v) { return ad::add(v[0], v[1]); }, {m23(), row3()}},
      {"sub", [](ad::Tape&, const V& v) { return ad::sub(v[0], v[1]); }, {m23(), row3()}},
      {"mul", [](ad::Tape&, const V& v) { return ad::mul(v[0], v[1]); }, {m23(), m23()}},
      {"mul row broadcast", [](ad::Tape&, const V& v) { return ad::mul(v[0], v[1]); }, {m23(), row3()}},
      {"scale", [](ad::Tape&, const V& v) { return ad::scale(v[0], -1.7); }, {m23()}},
      {"gelu", [](ad::Tape&, const V& v) { return ad::gelu(v[0]); }, {m34()}},
      {"exp", [](ad::Tape&, const V& v) { return ad::exp(v[0]); }, {m23()}},
      {"log", [](ad::Tape&, const V& v) { return ad::log(v[0]); }, {random_tensor(rng, {2, 3}, 0.2, 2.0)}},
      {"transpose", [](ad::Tape&, const V& v) { return ad::transpose(v[0]); }, {m23()}},
      {"concat axis 0", [](ad::Tape&, const V& v) { return ad::concat(v, 0); }, {m23(), row3()}},
      {"concat axis 1", [](ad::Tape&, const V& v) { return ad::concat(std::vector{v[0], ad::transpose(v[1])}, 1); },
       {random_tensor(rng, {3, 2}), row3()}},
      {"slice", [](ad::Tape&, const V& v) { return ad::slice(v[0], 1, 1, 2); }, {m34()}},
      {"mean axis 0", [](ad::Tape&, const V& v) { return ad::mean(v[0], 0); }, {m34()}},
      {"mean axis 1", [](ad::Tape&, const V& v) { return ad::mean(v[0], -1); }, {m34()}},
      {"sum", [](ad::Tape&, const V& v) { return ad::sum(v[0]); }, {m23()}},
      {"layer_norm", [](ad::Tape&, const V& v) { return ad::layer_norm(v[0], 1); }, {m34()}},
      {"layer_norm axis 0", [](ad::Tape&, const V& v) { return ad::layer_norm(v[0], 0); }, {m34()}},
      {"softmax", [](ad::Tape&, const V& v) { return ad::softmax(v[0], 1); }, {m34()}},
      {"softmax axis 0", [](ad::Tape&, const V& v) { return ad::softmax(v[0], 0); }, {m34()}},
      {"l2_normalize", [](ad::Tape&, const V& v) { return ad::l2_normalize(v[0], 1); }, {m34()}},
      {"cross_entropy",
       [](ad::Tape&, const V& v) {
         static const std::size_t labels[] = {2, 0, 3};
         return ad::cross_entropy(v[0], labels);
       },
       {m34()}},
  };
  // relu is piecewise linear; keep inputs away from the kink.
  Tensor away(Shape{2, 3});
  for (std::size_t i = 0; i < away.size(); ++i) away[i] = (i % 2 ? 1.0 : -1.0) * rng.uniform(0.1, 2.0);
  cases.push_back({"relu", [](ad::Tape&, const V& v) { return ad::relu(v[0]); }, {away}});

  std::uint64_t seed = 1;
  for (const auto& c : cases) {
    CAPTURE(c.name);
    CHECK(check_builder(c.build, c.inputs, seed++) <= 1e-6);
  }
}

TEST_CASE("two-layer MLP gradient matches central differences to 1e-6") {
  Rng rng(99);
  for (int draw = 0; draw < 5; ++draw) {
    std::vector<Tensor> inputs = {random_tensor(rng, {4, 5}), random_tensor(rng, {5, 6}), random_tensor(rng, {1, 6}),
                                  random_tensor(rng, {6, 3}), random_tensor(rng, {1, 3})};
    auto build = [](ad::Tape&, const std::vector<ad::Var>& v) {
      auto h = ad::gelu(ad::add(ad::matmul(v[0], v[1]), v[2]));
      auto logits = ad::add(ad::matmul(h, v[3]), v[4]);
      static const std::size_t labels[] = {0, 2, 1, 2};
      return ad::cross_entropy(logits, labels);
    };
    CHECK(check_builder(build, inputs, 500 + draw) <= 1e-6);
  }
}

TEST_CASE("softmax rows are a probability distribution") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t rows = 1 + rng.below(5), cols = 1 + rng.below(9);
    ad::Tape tape;
    auto y = ad::softmax(tape.constant(random_tensor(rng, {rows, cols}, -30, 30)), 1).value();
    for (std::size_t r = 0; r < rows; ++r) {
      double s = 0.0;
      for (double v : y.row(r)) {
        CHECK(v >= 0.0);
        s += v;
      }
      CHECK(std::abs(s - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("forward is deterministic") {
  Rng rng(3);
  auto a = random_tensor(rng, {5, 7}), b = random_tensor(rng, {7, 4});
  auto run = [&] {
    ad::Tape tape;
    return ad::softmax(ad::gelu(ad::matmul(tape.constant(a), tape.constant(b))), 1).value();
  };
  CHECK(run() == run());
}

TEST_CASE("constant inputs carry no gradient") {
  ad::Tape tape;
  auto c = tape.constant(Tensor({2, 2}, 1.0));
  auto p = tape.parameter(Tensor({2, 2}, 2.0));
  tape.backward(ad::sum(ad::mul(c, p)));
  CHECK(p.grad() == Tensor({2, 2}, 1.0));
  CHECK_THROWS_AS((void)c.grad(), UsageError);
}

TEST_CASE("rewind drops later nodes") {
  ad::Tape tape;
  auto p = tape.parameter(Tensor::vector({1.0, 2.0}));
  const auto mark = tape.mark();
  (void)ad::scale(p, 2.0);
  CHECK(tape.size() == mark + 1);
  tape.rewind(mark);
  CHECK(tape.size() == mark);
  auto loss = ad::sum(ad::scale(p, 3.0));
  tape.backward(loss);
  CHECK(p.grad() == Tensor::vector({3.0, 3.0}));
}

TEST_CASE("sgd_step worked examples") {
  Tensor p = Tensor::scalar(1.0);
  ad::sgd_step(p, Tensor::scalar(0.0), 0.1, 0.0);
  CHECK(p[0] == 1.0);

  Tensor q = Tensor::scalar(0.0);
  ad::sgd_step(q, Tensor::scalar(1.0), 0.001, 0.0);
  CHECK(q[0] == doctest::Approx(-0.001).epsilon(1e-15));

  Tensor r = Tensor::scalar(1.0);
  ad::sgd_step(r, Tensor::scalar(0.0), 0.1, 0.5);
  CHECK(r[0] == doctest::Approx(0.95).epsilon(1e-15));

  CHECK_THROWS_AS(ad::sgd_step(r, Tensor::vector({1, 2}), 0.1, 0.0), DimensionError);
  CHECK_THROWS_AS(ad::sgd_step(r, Tensor::scalar(0.0), 0.0, 0.0), UsageError);
}
