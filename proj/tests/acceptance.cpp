// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Usage: acceptance [--skip-e2e]

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "ffcac/ad/ops.hpp"
#include "ffcac/audio/patches.hpp"
#include "ffcac/mee/mee.hpp"
#include "ffcac/protocol/experiment.hpp"
#include "ffcac/rng.hpp"
#include "ffcac/rrc/rrc.hpp"

using namespace ffcac;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(const char* name, bool ok, const std::string& detail) {
  std::printf("%s  %-28s %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

double max_abs(const Tensor& t) {
  double m = 0;
  for (double v : t.values()) m = std::max(m, std::abs(v));
  return m;
}

// max |(G + lambda I) W - C|, computed here independently of the solver.
double residual(const rrc::ClassifierState& s, const Tensor& W) {
  const Tensor& G = s.gram();
  const Tensor& C = s.cross();
  const std::size_t D = G.rows(), N = C.cols();
  double worst = 0;
  for (std::size_t i = 0; i < D; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      double acc = s.lambda() * W(i, j) - C(i, j);
      for (std::size_t k = 0; k < D; ++k) acc += G(i, k) * W(k, j);
      worst = std::max(worst, std::abs(acc));
    }
  }
  return worst;
}

double worst_residual_ratio = 0.0;
std::size_t residual_solves = 0;

const Tensor& checked_solve(rrc::ClassifierState& s) {
  const Tensor& W = s.solve_weights();
  worst_residual_ratio = std::max(worst_residual_ratio, residual(s, W) / (1.0 + max_abs(s.cross())));
  ++residual_solves;
  return W;
}

Tensor random_matrix(Rng& rng, std::size_t r, std::size_t c) {
  Tensor t({r, c});
  for (auto& v : t.values()) v = rng.normal();
  return t;
}

std::vector<std::string> names(std::size_t first, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("c" + std::to_string(first + i));
  return out;
}

Tensor one_hot_rows(const std::vector<std::size_t>& labels, std::size_t classes) {
  Tensor Y({labels.size(), classes});
  for (std::size_t i = 0; i < labels.size(); ++i) Y(i, labels[i]) = 1.0;
  return Y;
}

void incremental_equivalence() {
  const auto start = Clock::now();
  Rng rng(2024);
  const double lambdas[] = {0.0, 0.1, 10.0};
  double worst = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t D = 1 + rng.below(64);
    const double lambda = lambdas[trial % 3];
    rrc::ClassifierState inc(D, lambda);
    std::vector<Tensor> Es;
    std::vector<std::size_t> all_labels;
    std::size_t next = 0, total = 0;
    for (int m = 0; m < 3; ++m) {
      const std::size_t classes = 1 + rng.below(5);
      const std::size_t n = D + 1 + rng.below(20);
      Tensor E = random_matrix(rng, n, D);
      std::vector<std::size_t> local(n);
      for (auto& l : local) l = rng.below(classes);
      const Tensor Y = one_hot_rows(local, classes);
      if (m == 0) {
        inc.fit_base(E, Y, names(next, classes));
      } else {
        inc.update_incremental(E, Y, names(next, classes));
      }
      checked_solve(inc);
      for (auto l : local) all_labels.push_back(next + l);
      next += classes;
      total += n;
      Es.push_back(std::move(E));
    }
    Tensor E({total, D});
    std::size_t row = 0;
    for (const auto& e : Es) {
      std::copy(e.data(), e.data() + e.size(), E.data() + row * D);
      row += e.rows();
    }
    rrc::ClassifierState batch(D, lambda);
    batch.fit_base(E, one_hot_rows(all_labels, next), names(0, next));
    const Tensor& a = checked_solve(inc);
    const Tensor& b = checked_solve(batch);
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  const double t = seconds_since(start);
  report("incremental_batch_equiv", worst <= 1e-8 && t < 10.0,
         fmt("50 trials, max |W_inc - W_batch| = %.3g (<= 1e-8), %.2f s (< 10 s)", worst, t));
}

void least_squares_oracle() {
  Rng rng(31);
  double worst = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t D = 1 + rng.below(48);
    const std::size_t n = D + 2 + rng.below(40);
    const std::size_t N = 1 + rng.below(6);
    const Tensor E = random_matrix(rng, n, D);
    std::vector<std::size_t> labels(n);
    for (auto& l : labels) l = rng.below(N);
    const Tensor Y = one_hot_rows(labels, N);
    rrc::ClassifierState s(D, 0.0);
    s.fit_base(E, Y, names(0, N));
    const Tensor& W = checked_solve(s);

    Eigen::MatrixXd Em(n, D), Ym(n, N);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < D; ++j) Em(i, j) = E(i, j);
      for (std::size_t j = 0; j < N; ++j) Ym(i, j) = Y(i, j);
    }
    const Eigen::MatrixXd ref = Em.completeOrthogonalDecomposition().pseudoInverse() * Ym;
    for (std::size_t i = 0; i < D; ++i) {
      for (std::size_t j = 0; j < N; ++j) worst = std::max(worst, std::abs(W(i, j) - ref(i, j)));
    }
  }
  report("lambda0_least_squares", worst <= 1e-8,
         fmt("30 full-rank trials vs pseudo-inverse (COD), max diff %.3g (<= 1e-8)", worst));
}

audio::LogMelSpectrogram random_lms(Rng& rng, std::size_t S_f, std::size_t S_t) {
  audio::LogMelSpectrogram lms{Tensor({S_f, S_t})};
  for (auto& v : lms.data.values()) v = rng.uniform(-2.0, 2.0);
  return lms;
}

void gradient_check() {
  const auto start = Clock::now();
  mee::MeeConfig cfg;
  cfg.encoder = {2, 16, 2, 32, 6, 64};
  cfg.patch = {8, 8, 8};
  Rng rng(404);
  const std::vector<std::size_t> labels = {0, 1, 2};
  double worst = 0, worst_zero = 0;
  std::size_t checks = 0;
  for (int draw = 0; draw < 20; ++draw) {
    mee::MeeParams p = mee::init_params(cfg, 5000 + draw);
    for (auto& t : p.tensors) {
      for (auto& v : t.values()) v += 0.1 * rng.normal();
    }
    std::vector<audio::LogMelSpectrogram> clips;
    for (int i = 0; i < 3; ++i) clips.push_back(random_lms(rng, 16, 24));
    const rrc::CosineHead head = rrc::CosineHead::init(3, cfg.encoder.dim, 16.0, draw);
    auto build = [&](ad::Tape& tape, const mee::BoundParams& bound) {
      std::vector<ad::Var> rows;
      for (const auto& c : clips) rows.push_back(mee::embed(bound, c));
      return rrc::cosine_loss(ad::concat(rows, 0), tape.constant(head.weight), labels, head.eta);
    };
    auto value = [&](const mee::MeeParams& q) {
      ad::Tape tape;
      return build(tape, mee::bind(tape, q, false)).value()[0];
    };
    ad::Tape tape;
    const mee::BoundParams bound = mee::bind(tape, p, true);
    tape.backward(build(tape, bound));

    for (std::size_t i = 0; i < p.tensors.size(); ++i) {
      const Tensor& g = bound.vars[i].grad();
      std::vector<double> dir(g.size());
      double analytic = 0;
      for (std::size_t k = 0; k < g.size(); ++k) {
        dir[k] = rng.normal();
        analytic += g[k] * dir[k];
      }
      const double h = 1e-5;
      mee::MeeParams up = p, down = p;
      for (std::size_t k = 0; k < g.size(); ++k) {
        up.tensors[i][k] += h * dir[k];
        down.tensors[i][k] -= h * dir[k];
      }
      const double numeric = (value(up) - value(down)) / (2 * h);
      if (p.names[i].ends_with("attn.k.bias")) {
        // Softmax cancels a key bias: the exact gradient is zero.
        worst_zero = std::max({worst_zero, std::abs(analytic), std::abs(numeric)});
        continue;
      }
      const double scale = std::max(std::abs(analytic), std::abs(numeric));
      worst = std::max(worst, scale == 0 ? 0 : std::abs(analytic - numeric) / scale);
      ++checks;
    }
  }
  const double t = seconds_since(start);
  report("gradient_check", worst <= 1e-4 && worst_zero <= 1e-8 && t < 60.0,
         fmt("L=2 D=16, 20 draws, %.0f directional checks, worst rel err %.3g (<= 1e-4); key-bias |grad| %.2g; "
             "%.1f s (< 60 s)",
             static_cast<double>(checks), worst, worst_zero, t));
}

void patch_count_oracle() {
  Rng rng(8);
  int bad = 0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t s_f = 1 + rng.below(20), s_t = 1 + rng.below(20), d = 1 + rng.below(20);
    const std::size_t S_f = s_f + rng.below(140), S_t = s_t + rng.below(140);
    std::size_t origins = 0;
    for (std::size_t r = 0; r + s_f <= S_f; r += d) {
      for (std::size_t c = 0; c + s_t <= S_t; c += d) ++origins;
    }
    if (audio::patch_count(S_f, S_t, s_f, s_t, d) != origins) ++bad;
  }
  const std::size_t z120 = audio::patch_count(128, 106, 16, 16, 10);
  const std::size_t z80 = audio::patch_count(128, 160, 16, 16, 16);
  report("patch_count_oracle", bad == 0 && z120 == 120 && z80 == 80,
         fmt("100 random configs, %.0f mismatches; Z(128x106,16,10)=%.0f, Z(128x160,16,16)=%.0f", bad,
             static_cast<double>(z120), static_cast<double>(z80)));
}

void metric_arithmetic() {
  struct Row {
    std::vector<double> acc;
    double aa, pd;
  };
  const Row rows[] = {
      {{94.50, 76.85, 62.10, 55.51, 52.98, 48.56, 48.33, 46.37, 46.93, 57.36}, 58.95, 37.14},
      {{80.78, 83.02, 74.23, 70.85, 70.25, 62.77, 59.9, 66.79, 59.86, 58.07}, 68.65, 22.71},
      {{55.50, 40.85, 39.97, 34.60, 27.04, 28.95, 24.96, 27.23, 26.03, 27.55}, 33.27, 27.95},
  };
  bool ok = true;
  std::string detail;
  for (const auto& r : rows) {
    const double aa = std::round(protocol::compute_aa(r.acc) * 100) / 100;
    const double pd = std::round(protocol::compute_pd(r.acc) * 100) / 100;
    ok = ok && std::abs(aa - r.aa) < 1e-9 && std::abs(pd - r.pd) < 1e-9;
    detail += fmt("AA %.2f PD %.2f; ", aa, pd);
  }
  report("metric_arithmetic", ok, detail + "expected 58.95/37.14, 68.65/22.71, 33.27/27.95");
}

std::uint64_t closed_form_np(const mee::MeeConfig& c) {
  const std::uint64_t P = c.encoder.patch_dim, D = c.encoder.dim, H = c.encoder.mlp_hidden, L = c.encoder.layers,
                      Z = c.encoder.max_patches, F = c.fusion_width();
  const std::uint64_t block = 4 * D + 4 * (D * D + D) + (D * H + H) + (H * D + D) + 2 * D;
  return (P * D + D) + D + (Z + 1) * D + L * block + (L * D * F + F) + (F * L + L);
}

void parameter_census(const protocol::ExperimentConfig& toy) {
  mee::MeeConfig ast;
  ast.encoder = {12, 768, 12, 3072, 312, 256};
  ast.patch = {16, 16, 10};
  ast.fusion_hidden = 96;
  const double np = static_cast<double>(mee::count_params_macs(ast, 312, 100).np);
  const std::uint64_t toy_np = mee::count_params_macs(toy.model, toy.model.encoder.max_patches, 10).np;
  const std::uint64_t toy_ref = closed_form_np(toy.model);
  const double dev = std::abs(np - 86.84e6) / 86.84e6;
  report("parameter_census", dev <= 0.05 && toy_np == toy_ref,
         fmt("AST-base NP %.0f (%.2f%% from 86.84M, <= 5%%); toy NP %.0f vs closed form %.0f", np, 100 * dev,
             static_cast<double>(toy_np), static_cast<double>(toy_ref)));
}

// Nearest class mean on the time-averaged raw log-mel frames, using the same
// support sets as each run. Independent of the extractor and both classifiers.
double ncm_oracle(const protocol::ExperimentConfig& cfg, const protocol::Dataset& data, std::size_t run) {
  const std::uint64_t seed = cfg.run.seed + run;
  // Seed streams of the run driver: plan 10, episode of session m 20 + m.
  const protocol::SessionPlan plan = protocol::make_splits(data, cfg.plan, derive_seed(seed, 10));
  auto feature = [&](std::size_t item) {
    const Tensor& x = data.item(item).lms.data;
    std::vector<double> f(x.rows(), 0.0);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      for (std::size_t c = 0; c < x.cols(); ++c) f[r] += x(r, c) / x.cols();
    }
    return f;
  };
  std::vector<std::size_t> classes;
  std::vector<std::vector<double>> means;
  for (std::size_t m = 0; m < plan.sessions(); ++m) {
    const protocol::Episode ep = protocol::sample_episode(data, plan, m, derive_seed(seed, 20 + m));
    for (std::size_t k = 0; k < plan.classes[m].size(); ++k) {
      std::vector<double> mean(data.item(ep.items[0]).lms.data.rows(), 0.0);
      std::size_t n = 0;
      for (std::size_t i = 0; i < ep.items.size(); ++i) {
        if (ep.local_labels[i] != k) continue;
        const auto f = feature(ep.items[i]);
        for (std::size_t j = 0; j < f.size(); ++j) mean[j] += f[j];
        ++n;
      }
      for (auto& v : mean) v /= static_cast<double>(n);
      classes.push_back(plan.classes[m][k]);
      means.push_back(std::move(mean));
    }
  }
  std::size_t correct = 0, total = 0;
  for (std::size_t c : classes) {
    for (std::size_t item : data.test_items(c)) {
      const auto f = feature(item);
      std::size_t best = 0;
      double best_d = INFINITY;
      for (std::size_t k = 0; k < means.size(); ++k) {
        double d = 0;
        for (std::size_t j = 0; j < f.size(); ++j) d += (f[j] - means[k][j]) * (f[j] - means[k][j]);
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      correct += classes[best] == c;
      ++total;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

void end_to_end(const protocol::ExperimentConfig& cfg) {
  const auto start = Clock::now();
  const protocol::Dataset data = protocol::Dataset::from_config(cfg);
  const protocol::RunReport rep = protocol::run_repeated(cfg, data, 10, 1);
  const double t = seconds_since(start);

  double oracle = 0;
  for (std::size_t r = 0; r < 10; ++r) oracle += ncm_oracle(cfg, data, r) / 10.0;
  const double last = rep.accuracy.back().mean;
  const bool shape_ok = cfg.data.synth.num_classes == 10 && cfg.plan.base_classes == 5 && cfg.plan.base_shots == 5 &&
                        cfg.plan.sessions == 1 && cfg.plan.classes_per_session == 5 && cfg.plan.shots == 5 &&
                        cfg.train.epochs == 100;
  report("end_to_end_desk_run", shape_ok && last >= 0.80 && rep.pd.mean <= 0.15 && oracle > 0.80 && t < 300.0,
         fmt("10 seeds: final accuracy %.4f (>= 0.80), PD %.4f (<= 0.15), NCM oracle %.4f (> 0.80), %.1f s (< 300 s)",
             last, rep.pd.mean, oracle, t));

  bool frozen = true;
  std::size_t sessions = 0;
  for (const auto& r : rep.runs) {
    frozen = frozen && r.frozen && !r.frozen_checks.empty();
    for (const auto& [before, after] : r.frozen_checks) {
      frozen = frozen && before == after && before == r.mee_checksum;
      ++sessions;
    }
  }
  report("freezing_invariant", frozen,
         fmt("%.0f incremental sessions, extractor checksum unchanged in all", static_cast<double>(sessions)));

  protocol::Learner learner;
  protocol::run_once(cfg, data, 0, &learner);
  checked_solve(learner.ridge);
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void determinism(const fs::path& config) {
  const fs::path root = fs::temp_directory_path() / ("ffcac_accept_" + std::to_string(::getpid()));
  std::string a, b;
  bool ran = true;
  for (const char* sub : {"a", "b"}) {
    const std::string cmd = std::string("\"") + FFCAC_CLI + "\" run --config \"" + config.string() + "\" --out \"" +
                            (root / sub).string() + "\" --runs 2 --threads 2 > /dev/null";
    ran = ran && std::system(cmd.c_str()) == 0;
  }
  a = slurp(root / "a" / "report.json");
  b = slurp(root / "b" / "report.json");
  std::error_code ec;
  fs::remove_all(root, ec);
  report("run_determinism", ran && !a.empty() && a == b,
         fmt("two `ffcac run` executions (2 runs each): %.0f vs %.0f bytes, identical=%.0f", a.size(), b.size(),
             a == b ? 1.0 : 0.0));
}

}  // namespace

int main(int argc, char** argv) {
  const bool skip_e2e = argc > 1 && std::string(argv[1]) == "--skip-e2e";
  const fs::path toy_path = fs::path(FFCAC_SOURCE_DIR) / "configs" / "toy.conf";
  try {
    const protocol::ExperimentConfig toy = protocol::load_config(toy_path);
    incremental_equivalence();
    least_squares_oracle();
    gradient_check();
    patch_count_oracle();
    metric_arithmetic();
    parameter_census(toy);
    if (!skip_e2e) {
      end_to_end(toy);
      determinism(toy_path);
    }
    report("normal_equation_residual", worst_residual_ratio <= 1e-8,
           fmt("%.0f solves, max ||(G+lambda I)W - C|| / (1 + ||C||) = %.3g (<= 1e-8)",
               static_cast<double>(residual_solves), worst_residual_ratio));
  } catch (const std::exception& e) {
    std::printf("FAIL  acceptance aborted: %s\n", e.what());
    return 1;
  }
  return failures == 0 ? 0 : 1;
}
