#include <algorithm>
#include <map>

#include "ffcac/audio/synth.hpp"
#include "ffcac/error.hpp"
#include "ffcac/protocol/dataset.hpp"
#include "ffcac/rng.hpp"

namespace ffcac::protocol {

void Dataset::add(std::size_t cls, audio::Split split, audio::LogMelSpectrogram lms) {
  const std::size_t index = items_.size();
  items_.push_back(Item{cls, split, std::move(lms)});
  (split == audio::Split::kTrain ? train_ : test_)[cls].push_back(index);
}

Dataset Dataset::synthetic(const audio::SynthConfig& synth, std::size_t train_per_class, std::size_t test_per_class,
                           const audio::FrontendConfig& frontend, std::uint64_t seed) {
  synth.validate();
  const audio::LogMelExtractor extract(frontend);
  const std::size_t clip = frontend.clip_samples();
  Dataset d;
  d.train_.resize(synth.num_classes);
  d.test_.resize(synth.num_classes);
  for (std::size_t c = 0; c < synth.num_classes; ++c) {
    d.classes_.push_back((c < 10 ? "class0" : "class") + std::to_string(c));
    for (std::size_t i = 0; i < train_per_class + test_per_class; ++i) {
      const auto wave = audio::synth_class_waveform(c, derive_seed(seed, c * 1000003 + i), synth);
      d.add(c, i < train_per_class ? audio::Split::kTrain : audio::Split::kTest,
            extract(audio::fit_duration(wave, clip)));
    }
  }
  return d;
}

Dataset Dataset::from_manifest(const std::filesystem::path& manifest, const audio::FrontendConfig& frontend) {
  const auto entries = audio::read_manifest(manifest);
  std::map<std::string, std::size_t> index;
  for (const auto& e : entries) index.emplace(e.label, 0);
  Dataset d;
  for (auto& [label, i] : index) {
    i = d.classes_.size();
    d.classes_.push_back(label);
  }
  d.train_.resize(d.classes_.size());
  d.test_.resize(d.classes_.size());
  const audio::LogMelExtractor extract(frontend);
  for (const auto& e : entries) {
    const auto wave = audio::load_wav(e.path, frontend.sample_rate_hz);
    d.add(index.at(e.label), e.split, extract(audio::fit_duration(wave, frontend.clip_samples())));
  }
  return d;
}

Dataset Dataset::from_config(const ExperimentConfig& cfg) {
  if (cfg.data.source == DataSource::kManifest) return from_manifest(cfg.data.manifest, cfg.frontend);
  return synthetic(cfg.data.synth, cfg.data.train_per_class, cfg.data.test_per_class, cfg.frontend,
                   derive_seed(cfg.run.seed, 0x64617461));
}

SessionPlan make_splits(const Dataset& data, const PlanConfig& plan, std::uint64_t seed) {
  const std::size_t needed = plan.base_classes + plan.sessions * plan.classes_per_session;
  const std::size_t have = data.classes().size();
  if (have < needed) {
    throw ProtocolError("plan needs " + std::to_string(needed) + " classes (" + std::to_string(plan.base_classes) +
                        " base + " + std::to_string(plan.sessions) + " x " +
                        std::to_string(plan.classes_per_session) + ") but the data has " + std::to_string(have));
  }
  std::vector<std::size_t> order(have);
  for (std::size_t i = 0; i < have; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  SessionPlan p;
  std::size_t next = 0;
  for (std::size_t m = 0; m <= plan.sessions; ++m) {
    const std::size_t n = m == 0 ? plan.base_classes : plan.classes_per_session;
    const std::size_t k = m == 0 ? plan.base_shots : plan.shots;
    std::vector<std::size_t> cls(order.begin() + static_cast<std::ptrdiff_t>(next),
                                 order.begin() + static_cast<std::ptrdiff_t>(next + n));
    next += n;
    for (std::size_t c : cls) {
      if (data.train_items(c).size() < k) {
        throw ProtocolError("class " + data.classes()[c] + " has " + std::to_string(data.train_items(c).size()) +
                            " train items, session " + std::to_string(m) + " needs " + std::to_string(k));
      }
      if (data.test_items(c).empty()) throw ProtocolError("class " + data.classes()[c] + " has no test items");
    }
    p.classes.push_back(std::move(cls));
    p.shots.push_back(k);
  }
  return p;
}

Episode sample_episode(const Dataset& data, const SessionPlan& plan, std::size_t m, std::uint64_t seed) {
  if (m >= plan.sessions()) {
    throw UsageError("session " + std::to_string(m) + " not in a plan of " + std::to_string(plan.sessions()));
  }
  Episode e;
  e.session = m;
  const std::size_t k = plan.shots[m];
  for (std::size_t j = 0; j < plan.classes[m].size(); ++j) {
    const std::size_t c = plan.classes[m][j];
    std::vector<std::size_t> pool = data.train_items(c);
    if (pool.size() < k) {
      throw ProtocolError("class " + data.classes()[c] + " has " + std::to_string(pool.size()) +
                          " train items, fewer than " + std::to_string(k) + " shots");
    }
    Rng rng(derive_seed(seed, c));
    // Partial Fisher-Yates: the first k positions are a uniform sample.
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t r = i + static_cast<std::size_t>(rng.below(pool.size() - i));
      std::swap(pool[i], pool[r]);
      e.items.push_back(pool[i]);
      e.local_labels.push_back(j);
    }
  }
  return e;
}

}  // namespace ffcac::protocol
