#pragma once

#include <functional>
#include <vector>

#include "lm/model.hpp"

namespace adaptlm::lm {

using Sentence = std::vector<TokenId>;

struct TrainOptions {
  std::size_t epochs = 10;
  std::size_t early_stop_patience = 2;
  std::size_t batch_size = 16;
  // Learning rate is divided by this factor after an epoch without
  // validation improvement (1 disables annealing).
  double lr_decay = 4.0;
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double learning_rate = 0.0;
  double train_perplexity = 0.0;
  double valid_perplexity = 0.0;
  double best_valid_perplexity = 0.0;
  bool improved = false;
};

struct TrainingLog {
  double initial_valid_perplexity = 0.0;
  std::vector<EpochLog> epochs;
  std::size_t best_epoch = 0;
  bool stopped_early = false;
};

template <typename Real>
struct TrainResult {
  ModelParameters<Real> params;  // weights from the best validation epoch
  TrainingLog log;
};

// Eval-mode perplexity with every sentence scored from a zero state.
template <typename Real>
double corpus_perplexity(const ModelParameters<Real>& params, const std::vector<Sentence>& sentences);

// Minibatch SGD from a fresh initialization with validation-based early
// stopping. An empty validation set falls back to the training set.
template <typename Real>
TrainResult<Real> train_base_model(const std::vector<Sentence>& train, const std::vector<Sentence>& valid,
                                   std::size_t vocab_size, const HyperParams& hyper, const TrainOptions& options,
                                   const std::function<void(const EpochLog&)>& on_epoch = {});

}  // namespace adaptlm::lm
