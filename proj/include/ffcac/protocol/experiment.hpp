#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ffcac/protocol/config.hpp"
#include "ffcac/protocol/dataset.hpp"
#include "ffcac/protocol/session.hpp"

namespace ffcac::protocol {

// Average accuracy over sessions and first-minus-last degradation.
// UsageError on an empty list.
double compute_aa(std::span<const double> accs);
double compute_pd(std::span<const double> accs);

struct RunResult {
  std::size_t run = 0;
  std::uint64_t seed = 0;
  std::vector<double> accuracies;      // A_0..A_M, configured classifier
  std::vector<double> pbc_accuracies;  // same extractor, prototype classifier
  std::vector<double> rrc_accuracies;  // same extractor, ridge classifier
  double aa = 0.0;
  double pd = 0.0;
  double lambda = 0.0;
  std::vector<double> loss_history;
  std::uint64_t mee_checksum = 0;
  // Checksums before/after each incremental session.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> frozen_checks;
  bool frozen = true;
};

struct Stat {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for one run
};

struct RunReport {
  std::vector<RunResult> runs;
  std::vector<Stat> accuracy;  // per session
  Stat aa;
  Stat pd;
};

Stat summarize(std::span<const double> values);
RunReport aggregate(std::vector<RunResult> runs);

// Seeds: run r uses seed + r. The optional learner receives the final state.
RunResult run_once(const ExperimentConfig& cfg, const Dataset& data, std::size_t run, Learner* final_state = nullptr);

// Runs are distributed over `threads` workers; results do not depend on the
// thread count. Errors are rethrown annotated with the run index.
RunReport run_repeated(const ExperimentConfig& cfg, const Dataset& data, std::size_t n_runs, std::size_t threads = 1);

// Deterministic JSON: config echo, per-run and aggregate results, fractions
// rounded to 6 decimals.
std::string report_json(const ExperimentConfig& cfg, const RunReport& report);
// One row per method, sessions then AA and PD, in percent with 2 decimals.
std::string report_csv(const std::string& json_text);

struct AblationRow {
  int case_id = 0;  // 1..4
  bool fusion = false;
  ClassifierKind classifier = ClassifierKind::kPbc;
  RunReport report;
};

// The 2x2 grid over fusion on/off and PBC/RRC. Both classifiers of a fusion
// setting share each run's extractor.
std::vector<AblationRow> run_ablation(const ExperimentConfig& cfg, const Dataset& data, std::size_t n_runs,
                                      std::size_t threads = 1);
std::string ablation_json(const ExperimentConfig& cfg, const std::vector<AblationRow>& rows);
std::string ablation_csv(const std::vector<AblationRow>& rows);

// Threads from a flag value (0 = unset), else FFCAC_THREADS, else 1.
std::size_t resolve_threads(std::size_t flag);

}  // namespace ffcac::protocol
