#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ffcac/audio/frontend.hpp"
#include "ffcac/audio/manifest.hpp"
#include "ffcac/protocol/config.hpp"

namespace ffcac::protocol {

struct Item {
  std::size_t cls = 0;  // index into Dataset::classes()
  audio::Split split = audio::Split::kTrain;
  audio::LogMelSpectrogram lms;
};

// Clips with precomputed spectrograms, grouped by class. Read-only once built,
// so it can be shared across concurrent runs.
class Dataset {
 public:
  // Classes are named class00, class01, ...; each class gets train_per_class
  // then test_per_class clips. Deterministic in (cfg, seed).
  static Dataset synthetic(const audio::SynthConfig& synth, std::size_t train_per_class, std::size_t test_per_class,
                           const audio::FrontendConfig& frontend, std::uint64_t seed);
  // Classes ordered by label. Each clip is fitted to the configured duration.
  static Dataset from_manifest(const std::filesystem::path& manifest, const audio::FrontendConfig& frontend);
  // Dispatch on cfg.data.source; synthetic data is seeded from cfg.run.seed.
  static Dataset from_config(const ExperimentConfig& cfg);

  const std::vector<std::string>& classes() const { return classes_; }
  const std::vector<Item>& items() const { return items_; }
  const Item& item(std::size_t i) const { return items_.at(i); }
  const std::vector<std::size_t>& train_items(std::size_t cls) const { return train_.at(cls); }
  const std::vector<std::size_t>& test_items(std::size_t cls) const { return test_.at(cls); }

 private:
  void add(std::size_t cls, audio::Split split, audio::LogMelSpectrogram lms);

  std::vector<std::string> classes_;
  std::vector<Item> items_;
  std::vector<std::vector<std::size_t>> train_;
  std::vector<std::vector<std::size_t>> test_;
};

// Disjoint class sets per session and the shots to draw from each.
struct SessionPlan {
  std::vector<std::vector<std::size_t>> classes;  // Y_0..Y_M as dataset class indices
  std::vector<std::size_t> shots;                 // K_0..K_M

  std::size_t sessions() const { return classes.size(); }  // M + 1
};

// Deterministic per seed. ProtocolError stating the shortfall if there are
// too few classes, or a planned class has fewer than K_m train or no test items.
SessionPlan make_splits(const Dataset& data, const PlanConfig& plan, std::uint64_t seed);

struct Episode {
  std::size_t session = 0;
  std::vector<std::size_t> items;  // class-major, K_m per class
  std::vector<std::size_t> local_labels;  // position of each item's class within Y_m
};

// K_m train items per class of Y_m without replacement, deterministic per seed.
Episode sample_episode(const Dataset& data, const SessionPlan& plan, std::size_t m, std::uint64_t seed);

}  // namespace ffcac::protocol
