#include "ffcac/protocol/experiment.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <unordered_map>

#include "ffcac/error.hpp"
#include "ffcac/rng.hpp"

namespace ffcac::protocol {
namespace {

constexpr std::uint64_t kPlanStream = 10, kEpisodeStream = 20, kSessionStream = 30;

// Rethrows the current exception with the run index prefixed, keeping its kind.
[[noreturn]] void rethrow_annotated(std::size_t run) {
  const std::string where = "run " + std::to_string(run) + ": ";
  try {
    throw;
  } catch (const LoadError& e) {
    throw LoadError(e.reason(), where + e.what());
  } catch (const Error& e) {
    throw Error(e.kind(), where + e.what());
  }
}

}  // namespace

RunResult run_once(const ExperimentConfig& cfg, const Dataset& data, std::size_t run, Learner* final_state) {
  RunResult r;
  r.run = run;
  r.seed = cfg.run.seed + run;
  const SessionPlan plan = make_splits(data, cfg.plan, derive_seed(r.seed, kPlanStream));

  const Episode base = sample_episode(data, plan, 0, derive_seed(r.seed, kEpisodeStream));
  Learner learner = run_base_session(data, plan, base, cfg, derive_seed(r.seed, kSessionStream));
  r.loss_history = learner.loss_history;
  r.lambda = learner.ridge.lambda();

  // The extractor is frozen from here on, so every test clip is embedded once.
  std::unordered_map<std::size_t, Tensor> embedded;
  {
    std::vector<std::size_t> ids;
    std::vector<audio::LogMelSpectrogram> clips;
    for (const auto& session : plan.classes) {
      for (std::size_t c : session) {
        for (std::size_t i : data.test_items(c)) {
          ids.push_back(i);
          clips.push_back(data.item(i).lms);
        }
      }
    }
    const Tensor E = mee::embed_all(clips, learner.mee);
    const std::size_t D = E.cols();
    for (std::size_t k = 0; k < ids.size(); ++k) {
      embedded.emplace(ids[k], Tensor({D}, std::vector<double>(E.data() + k * D, E.data() + (k + 1) * D)));
    }
  }
  auto score = [&](std::size_t m) {
    const Tensor& W = learner.ridge.solve_weights();
    const auto& rrc_labels = learner.ridge.registry().labels();
    r.rrc_accuracies.push_back(evaluate(
        [&](std::size_t i) { return rrc_labels[rrc::predict(W, embedded.at(i).values()).index]; }, data, plan, m,
        &rrc_labels));
    const auto& pbc_labels = learner.prototypes.registry().labels();
    r.pbc_accuracies.push_back(evaluate(
        [&](std::size_t i) { return pbc_labels[learner.prototypes.predict(embedded.at(i).values()).index]; }, data,
        plan, m, &pbc_labels));
  };

  score(0);
  for (std::size_t m = 1; m < plan.sessions(); ++m) {
    const Episode ep = sample_episode(data, plan, m, derive_seed(r.seed, kEpisodeStream + m));
    const IncrementalStats s =
        run_incremental_session(learner, data, plan, ep, cfg, derive_seed(r.seed, kSessionStream + m));
    r.frozen_checks.emplace_back(s.checksum_before, s.checksum_after);
    r.frozen = r.frozen && s.checksum_before == s.checksum_after;
    score(m);
  }
  r.accuracies = cfg.classifier.kind == ClassifierKind::kRrc ? r.rrc_accuracies : r.pbc_accuracies;
  r.aa = compute_aa(r.accuracies);
  r.pd = compute_pd(r.accuracies);
  r.mee_checksum = mee::parameter_checksum(learner.mee);
  if (final_state) *final_state = std::move(learner);
  return r;
}

RunReport run_repeated(const ExperimentConfig& cfg, const Dataset& data, std::size_t n_runs, std::size_t threads) {
  if (n_runs == 0) throw UsageError("n_runs must be at least 1");
  std::vector<RunResult> results(n_runs);
  std::vector<std::exception_ptr> errors(n_runs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < n_runs; r = next++) {
      try {
        results[r] = run_once(cfg, data, r);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, n_runs));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t r = 0; r < n_runs; ++r) {
    if (errors[r]) {
      try {
        std::rethrow_exception(errors[r]);
      } catch (...) {
        rethrow_annotated(r);
      }
    }
  }
  return aggregate(std::move(results));
}

std::vector<AblationRow> run_ablation(const ExperimentConfig& cfg, const Dataset& data, std::size_t n_runs,
                                      std::size_t threads) {
  std::vector<AblationRow> rows(4);
  for (bool fusion : {false, true}) {
    ExperimentConfig c = cfg;
    c.model.fusion = fusion;
    const RunReport rep = run_repeated(c, data, n_runs, threads);
    for (ClassifierKind kind : {ClassifierKind::kPbc, ClassifierKind::kRrc}) {
      std::vector<RunResult> runs = rep.runs;
      for (auto& r : runs) {
        r.accuracies = kind == ClassifierKind::kRrc ? r.rrc_accuracies : r.pbc_accuracies;
        r.aa = compute_aa(r.accuracies);
        r.pd = compute_pd(r.accuracies);
      }
      const int id = (kind == ClassifierKind::kRrc ? 3 : 1) + (fusion ? 1 : 0);
      rows[static_cast<std::size_t>(id - 1)] = AblationRow{id, fusion, kind, aggregate(std::move(runs))};
    }
  }
  return rows;
}

std::size_t resolve_threads(std::size_t flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("FFCAC_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return v;
    throw ConfigError(std::string("FFCAC_THREADS must be a positive integer, got `") + env + "`");
  }
  return 1;
}

}  // namespace ffcac::protocol
