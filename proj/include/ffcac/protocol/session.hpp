#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ffcac/mee/mee.hpp"
#include "ffcac/protocol/config.hpp"
#include "ffcac/protocol/dataset.hpp"
#include "ffcac/rrc/rrc.hpp"

namespace ffcac::protocol {

// Everything a run carries between sessions: the extractor (trainable in the
// base session, frozen afterwards) and both classifiers over the same
// embeddings, so the classifier ablation shares one trained extractor.
struct Learner {
  mee::MeeParams mee;
  rrc::ClassifierState ridge;
  rrc::Prototypes prototypes;
  std::vector<double> loss_history;  // mean training loss per epoch

  // Registry label of the predicted class.
  const std::string& predict(const audio::LogMelSpectrogram& lms, ClassifierKind kind);
};

// Finetunes a fresh extractor on the base episode under the cosine-softmax
// loss (plain SGD with weight decay, shuffled mini-batches), then re-embeds the
// episode with the final extractor and builds both classifiers. NumericError
// naming the epoch if training diverges.
Learner run_base_session(const Dataset& data, const SessionPlan& plan, const Episode& episode,
                         const ExperimentConfig& cfg, std::uint64_t seed);

struct IncrementalStats {
  std::uint64_t checksum_before = 0;
  std::uint64_t checksum_after = 0;
  std::size_t new_classes = 0;
};

// Embeds the episode with the frozen extractor and appends its classes to both
// classifiers. ProtocolError on a label collision.
IncrementalStats run_incremental_session(Learner& learner, const Dataset& data, const SessionPlan& plan,
                                         const Episode& episode, const ExperimentConfig& cfg, std::uint64_t seed);

// Class label predicted for dataset item i.
using Predictor = std::function<std::string(std::size_t item)>;

// Accuracy over the union of the test sets of sessions 0..m. ProtocolError if
// a test item's class is not among known_labels (when given).
double evaluate(const Predictor& predict, const Dataset& data, const SessionPlan& plan, std::size_t m,
                const std::vector<std::string>* known_labels = nullptr);
double evaluate(Learner& learner, const Dataset& data, const SessionPlan& plan, std::size_t m, ClassifierKind kind);

// Number of test items evaluated after session m.
std::size_t evaluation_size(const Dataset& data, const SessionPlan& plan, std::size_t m);

}  // namespace ffcac::protocol
