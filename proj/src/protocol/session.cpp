#include "ffcac/protocol/session.hpp"

#include <cmath>
#include <string>

#include "ffcac/ad/ops.hpp"
#include "ffcac/error.hpp"
#include "ffcac/rng.hpp"

namespace ffcac::protocol {
namespace {

constexpr std::uint64_t kInitStream = 1, kHeadStream = 2, kShuffleStream = 3, kCvStream = 4;

std::vector<audio::LogMelSpectrogram> episode_clips(const Dataset& data, const Episode& e) {
  std::vector<audio::LogMelSpectrogram> clips;
  for (std::size_t i : e.items) clips.push_back(data.item(i).lms);
  return clips;
}

std::vector<std::string> episode_labels(const Dataset& data, const SessionPlan& plan, const Episode& e) {
  std::vector<std::string> out;
  for (std::size_t c : plan.classes[e.session]) out.push_back(data.classes()[c]);
  return out;
}

double choose_lambda(const Tensor& E, const Episode& e, std::size_t classes, const ExperimentConfig& cfg,
                     std::uint64_t seed) {
  return rrc::select_lambda_cv(E, e.local_labels, classes, cfg.classifier.lambda_grid, cfg.classifier.cv_folds,
                               derive_seed(seed, kCvStream));
}

void train(Learner& learner, const Dataset& data, const Episode& episode, std::size_t classes,
           const ExperimentConfig& cfg, std::uint64_t seed) {
  const TrainConfig& tc = cfg.train;
  rrc::CosineHead head =
      rrc::CosineHead::init(classes, cfg.model.encoder.dim, tc.eta, derive_seed(seed, kHeadStream));
  Rng order_rng(derive_seed(seed, kShuffleStream));
  std::vector<std::size_t> order(episode.items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
    order_rng.shuffle(order);
    double loss_sum = 0.0;
    try {
      for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
        const std::size_t end = std::min(order.size(), start + tc.batch_size);
        ad::Tape tape;
        const mee::BoundParams bound = mee::bind(tape, learner.mee, true);
        const ad::Var head_w = tape.parameter(head.weight);
        std::vector<ad::Var> rows;
        std::vector<std::size_t> labels;
        for (std::size_t b = start; b < end; ++b) {
          rows.push_back(mee::embed(bound, data.item(episode.items[order[b]]).lms));
          labels.push_back(episode.local_labels[order[b]]);
        }
        const ad::Var loss = rrc::cosine_loss(ad::concat(rows, 0), head_w, labels, tc.eta);
        const double value = loss.value()[0];
        if (!std::isfinite(value)) throw NumericError("non-finite loss");
        loss_sum += value * static_cast<double>(end - start);
        tape.backward(loss);
        for (std::size_t i = 0; i < learner.mee.tensors.size(); ++i) {
          ad::sgd_step(learner.mee.tensors[i], bound.vars[i].grad(), tc.lr, tc.weight_decay);
        }
        ad::sgd_step(head.weight, head_w.grad(), tc.lr, tc.weight_decay);
      }
    } catch (const NumericError& e) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
    }
    for (const auto& t : learner.mee.tensors) {
      if (!t.all_finite()) throw NumericError("training diverged at epoch " + std::to_string(epoch));
    }
    learner.loss_history.push_back(loss_sum / static_cast<double>(order.size()));
  }
}

}  // namespace

const std::string& Learner::predict(const audio::LogMelSpectrogram& lms, ClassifierKind kind) {
  const mee::Embedding e = mee::mee_forward(lms, mee);
  if (kind == ClassifierKind::kRrc) return ridge.registry().label(ridge.predict(e.e.values()).index);
  return prototypes.registry().label(prototypes.predict(e.e.values()).index);
}

Learner run_base_session(const Dataset& data, const SessionPlan& plan, const Episode& episode,
                         const ExperimentConfig& cfg, std::uint64_t seed) {
  if (episode.session != 0) throw UsageError("run_base_session needs the session-0 episode");
  const std::size_t classes = plan.classes[0].size();
  Learner learner;
  learner.mee = mee::init_params(cfg.model, derive_seed(seed, kInitStream));
  train(learner, data, episode, classes, cfg, seed);

  const auto clips = episode_clips(data, episode);
  const Tensor E = mee::embed_all(clips, learner.mee);
  const auto labels = episode_labels(data, plan, episode);
  const double lambda =
      cfg.classifier.use_cv() ? choose_lambda(E, episode, classes, cfg, seed) : cfg.classifier.lambda;
  learner.ridge = rrc::ClassifierState(cfg.model.encoder.dim, lambda);
  learner.ridge.fit_base(E, rrc::one_hot(episode.local_labels, classes), labels);
  learner.prototypes = rrc::Prototypes(cfg.model.encoder.dim);
  learner.prototypes.add_classes(E, episode.local_labels, labels);
  return learner;
}

IncrementalStats run_incremental_session(Learner& learner, const Dataset& data, const SessionPlan& plan,
                                         const Episode& episode, const ExperimentConfig& cfg, std::uint64_t seed) {
  IncrementalStats s;
  s.checksum_before = mee::parameter_checksum(learner.mee);
  const auto labels = episode_labels(data, plan, episode);
  for (const auto& l : labels) {
    if (learner.ridge.registry().contains(l)) throw ProtocolError("label `" + l + "` was learned in an earlier session");
  }
  const auto clips = episode_clips(data, episode);
  const Tensor E = mee::embed_all(clips, learner.mee);
  const std::size_t classes = labels.size();
  learner.ridge.update_incremental(E, rrc::one_hot(episode.local_labels, classes), labels);
  if (cfg.classifier.reselect_lambda) learner.ridge.set_lambda(choose_lambda(E, episode, classes, cfg, seed));
  learner.prototypes.add_classes(E, episode.local_labels, labels);
  s.checksum_after = mee::parameter_checksum(learner.mee);
  s.new_classes = classes;
  return s;
}

double evaluate(const Predictor& predict, const Dataset& data, const SessionPlan& plan, std::size_t m,
                const std::vector<std::string>* known_labels) {
  if (m >= plan.sessions()) throw UsageError("session " + std::to_string(m) + " not in plan");
  std::size_t correct = 0, total = 0;
  for (std::size_t j = 0; j <= m; ++j) {
    for (std::size_t c : plan.classes[j]) {
      const std::string& truth = data.classes()[c];
      if (known_labels && std::find(known_labels->begin(), known_labels->end(), truth) == known_labels->end()) {
        throw ProtocolError("test class `" + truth + "` is not registered with the classifier");
      }
      for (std::size_t i : data.test_items(c)) {
        correct += predict(i) == truth;
        ++total;
      }
    }
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

double evaluate(Learner& learner, const Dataset& data, const SessionPlan& plan, std::size_t m, ClassifierKind kind) {
  const auto& known = kind == ClassifierKind::kRrc ? learner.ridge.registry().labels()
                                                   : learner.prototypes.registry().labels();
  // Embeddings are classifier-independent; W is solved once up front.
  if (kind == ClassifierKind::kRrc) learner.ridge.solve_weights();
  return evaluate([&](std::size_t i) { return learner.predict(data.item(i).lms, kind); }, data, plan, m, &known);
}

std::size_t evaluation_size(const Dataset& data, const SessionPlan& plan, std::size_t m) {
  std::size_t n = 0;
  for (std::size_t j = 0; j <= m; ++j) {
    for (std::size_t c : plan.classes[j]) n += data.test_items(c).size();
  }
  return n;
}

}  // namespace ffcac::protocol
