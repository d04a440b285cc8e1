#pragma once

#include <numeric>
#include <span>
#include <utility>

#include "probplan/grounding/sgn.hpp"

namespace probplan {

struct TrainConfig {
  double learning_rate = 2e-3;
  int batch_size = 32;
  int epochs = 150;
  std::uint64_t seed = 0;

  void validate() const {
    if (learning_rate <= 0.0 || batch_size < 1 || epochs < 1) {
      throw std::invalid_argument("training hyperparameters must be positive");
    }
  }
};

// One supervised sample: the continuous state and its true symbolic state.
using LabeledState = std::pair<ContinuousState, SymbolicState>;

struct TrainResult {
  ModularSgn model;
  std::vector<double> train_loss;  // mean per-atom BCE per epoch
  std::vector<double> val_loss;    // per epoch, when a validation set is given
};

// Mean per-atom binary cross-entropy of the model on a dataset.
inline double sgn_loss(const ModularSgn& model, std::span<const LabeledState> data) {
  double total = 0.0;
  for (const auto& [state, symbols] : data) {
    const auto logits = model.forward_logits(state);
    double sample = 0.0;
    for (AtomId id = 0; id < logits.size(); ++id) {
      sample += bce_with_logits(logits[id], symbols.test(id) ? 1.0 : 0.0);
    }
    total += sample / static_cast<double>(logits.size());
  }
  return total / static_cast<double>(data.size());
}

// Loss and parameter gradients of one mini-batch (mean per-atom BCE
// averaged over the batch). Gradients accumulate into grads, which must be
// zeroed by the caller.
inline double sgn_loss_grad(const ModularSgn& model, std::span<const LabeledState> batch,
                            ModularSgn::Gradients& grads) {
  const double scale =
      1.0 / (static_cast<double>(batch.size()) *
             static_cast<double>(model.universe()->size()));
  double total = 0.0;
  ModularSgn::Trace trace;
  std::vector<double> dlogits(model.universe()->size());
  for (const auto& [state, symbols] : batch) {
    const auto logits = model.forward_logits(state, &trace);
    for (AtomId id = 0; id < logits.size(); ++id) {
      const double y = symbols.test(id) ? 1.0 : 0.0;
      total += bce_with_logits(logits[id], y) * scale;
      dlogits[id] = (sigmoid(logits[id]) - y) * scale;
    }
    model.backward(trace, dlogits, grads);
  }
  return total;
}

// Mini-batch Adam on binary cross-entropy over all ground atoms.
// Deterministic for a fixed config: seeded init, seeded shuffles, serial
// accumulation.
inline TrainResult train_sgn(std::span<const LabeledState> train,
                             const TrainConfig& cfg,
                             std::span<const LabeledState> validation = {},
                             const SgnConfig& arch = {}) {
  cfg.validate();
  if (train.empty()) throw std::invalid_argument("training dataset is empty");
  const auto universe = train.front().second.universe();
  for (const auto& [state, symbols] : train) {
    if (symbols.universe() != universe) {
      throw std::invalid_argument("training samples span different universes");
    }
  }

  TrainResult result{ModularSgn(universe, arch, cfg.seed), {}, {}};
  ModularSgn& model = result.model;

  ModularSgn::Gradients grads;
  grads.resize_like(model);
  std::vector<AdamOptimizer> object_opt, predicate_opt;
  for (const auto& m : model.object_modules()) {
    object_opt.emplace_back(m.parameter_count(), cfg.learning_rate);
  }
  for (const auto& m : model.predicate_modules()) {
    predicate_opt.emplace_back(m.parameter_count(), cfg.learning_rate);
  }

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(cfg.seed, "sgn-shuffle"));
  std::vector<LabeledState> batch;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t covered = 0;
    while (covered < order.size()) {
      const std::size_t take =
          std::min<std::size_t>(cfg.batch_size, order.size() - covered);
      batch.clear();
      for (std::size_t i = 0; i < take; ++i) {
        batch.push_back(train[order[covered + i]]);
      }
      covered += take;

      grads.zero();
      const double loss = sgn_loss_grad(model, batch, grads);
      if (!std::isfinite(loss)) {
        throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                 std::to_string(epoch));
      }
      epoch_loss += loss * static_cast<double>(take);

      for (std::size_t m = 0; m < object_opt.size(); ++m) {
        object_opt[m].step(model.object_modules()[m].params(),
                           grads.object_modules[m]);
      }
      for (std::size_t m = 0; m < predicate_opt.size(); ++m) {
        predicate_opt[m].step(model.predicate_modules()[m].params(),
                              grads.predicate_modules[m]);
      }
    }
    result.train_loss.push_back(epoch_loss / static_cast<double>(train.size()));
    if (!validation.empty()) {
      result.val_loss.push_back(sgn_loss(model, validation));
    }
  }
  return result;
}

// Fraction of (state, atom) pairs the thresholded model gets right.
inline double sgn_accuracy(const ModularSgn& model, std::span<const LabeledState> data) {
  std::size_t correct = 0;
  std::size_t total = 0;
  for (const auto& [state, symbols] : data) {
    const auto logits = model.forward_logits(state);
    for (AtomId id = 0; id < logits.size(); ++id) {
      const bool predicted = sigmoid(logits[id]) > 0.5;
      correct += (predicted == symbols.test(id)) ? 1 : 0;
      ++total;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace probplan
