#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ffcac/audio/frontend.hpp"
#include "ffcac/audio/synth.hpp"
#include "ffcac/mee/mee.hpp"

namespace ffcac::protocol {

struct TrainConfig {
  std::size_t epochs = 100;
  double lr = 0.001;
  double weight_decay = 0.0005;
  double eta = 16.0;
  std::size_t batch_size = 5;
};

enum class ClassifierKind { kRrc, kPbc };
const char* to_string(ClassifierKind kind);

struct ClassifierConfig {
  ClassifierKind kind = ClassifierKind::kRrc;
  // Negative: choose by cross-validation over lambda_grid.
  double lambda = -1.0;
  std::vector<double> lambda_grid = {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3};
  std::size_t cv_folds = 5;
  // Re-run cross-validation on each incremental episode instead of keeping
  // the base-session lambda.
  bool reselect_lambda = false;

  bool use_cv() const { return lambda < 0; }
};

struct PlanConfig {
  std::size_t sessions = 1;  // M
  std::size_t base_classes = 5;
  std::size_t base_shots = 5;
  std::size_t classes_per_session = 5;
  std::size_t shots = 5;
};

enum class DataSource { kSynthetic, kManifest };

struct DataConfig {
  DataSource source = DataSource::kSynthetic;
  std::filesystem::path manifest;
  audio::SynthConfig synth;
  std::size_t train_per_class = 20;
  std::size_t test_per_class = 20;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t n_runs = 100;
};

struct ExperimentConfig {
  audio::FrontendConfig frontend;
  mee::MeeConfig model;
  TrainConfig train;
  ClassifierConfig classifier;
  PlanConfig plan;
  DataConfig data;
  RunConfig run;

  // Fills model.encoder.patch_dim and max_patches from the frontend and patch
  // settings; call after changing either.
  void derive();
  // ConfigError listing every violated constraint.
  void validate() const;
};

// Shipped defaults: the toy model, the 10-class synthetic plan and the
// training hyperparameters (lr 0.001, weight decay 0.0005, 100 epochs, eta 16).
ExperimentConfig default_config();

// Flat `key = value` text with dotted keys; `#` starts a comment. Unknown keys,
// malformed values and constraint violations are all reported in one
// ConfigError. Relative data paths resolve against base_dir.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
// IoError if the file cannot be read.
ExperimentConfig load_config(const std::filesystem::path& path);

// Every key with its current value, in canonical order.
std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& cfg);
std::string render_config(const ExperimentConfig& cfg);

}  // namespace ffcac::protocol
