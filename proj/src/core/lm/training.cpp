#include "lm/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <limits>
#include <random>

#include "error.hpp"

namespace adaptlm::lm {

namespace {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

template <typename Real>
double corpus_perplexity(const ModelParameters<Real>& params, const std::vector<Sentence>& sentences) {
  double nll = 0.0;
  std::size_t tokens = 0;
  const auto zero = LstmState<Real>::zeros(params.num_layers, params.hidden_size);
  for (const auto& s : sentences) {
    if (s.empty()) continue;
    auto pass = forward_sentence(params, s, zero);
    for (Real lp : pass.target_log_probs) nll -= static_cast<double>(lp);
    tokens += pass.target_log_probs.size();
  }
  if (tokens == 0) fail(ErrorKind::invalid_argument, "corpus_perplexity: no tokens to score");
  if (!std::isfinite(nll)) return std::numeric_limits<double>::infinity();
  return std::exp(nll / static_cast<double>(tokens));
}

template <typename Real>
TrainResult<Real> train_base_model(const std::vector<Sentence>& train, const std::vector<Sentence>& valid,
                                   std::size_t vocab_size, const HyperParams& hyper, const TrainOptions& options,
                                   const std::function<void(const EpochLog&)>& on_epoch) {
  hyper.validate();
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (!train[i].empty()) order.push_back(i);
  }
  if (order.empty()) fail(ErrorKind::invalid_argument, "train_base_model: empty training corpus");
  if (options.epochs == 0) fail(ErrorKind::usage, "train_base_model: epochs must be >= 1");
  const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
  const auto& valid_set = valid.empty() ? train : valid;

  TrainResult<Real> result;
  ModelParameters<Real> params = init_parameters<Real>(hyper, vocab_size);
  result.params = params;
  result.log.initial_valid_perplexity = corpus_perplexity(params, valid_set);
  double best = result.log.initial_valid_perplexity;
  double lr = hyper.base_learning_rate;
  std::size_t since_best = 0;
  std::mt19937_64 shuffle_rng(mix_seed(hyper.seed, 0x5eed));
  const auto zero = LstmState<Real>::zeros(hyper.num_layers, hyper.hidden_size);

  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double train_nll = 0.0;
    std::size_t train_tokens = 0;
    ForwardOptions fo;
    fo.mode = Mode::train;
    fo.reduction = hyper.loss_reduction;
    fo.dropout_rate = hyper.dropout_rate;

    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      std::vector<Tensor<Real>> total;
      for (std::size_t k = start; k < end; ++k) {
        const auto& s = train[order[k]];
        fo.dropout_seed = mix_seed(hyper.seed, epoch * 0x100000000ULL + k);
        auto g = sentence_gradient(params, s, zero, fo);
        const double n = static_cast<double>(s.size() + 1);
        train_nll += hyper.loss_reduction == LossReduction::mean ? g.loss * n : g.loss;
        train_tokens += s.size() + 1;
        if (total.empty()) {
          total = std::move(g.gradients);
        } else {
          for (std::size_t t = 0; t < total.size(); ++t) {
            Real* dst = total[t].data();
            const Real* src = g.gradients[t].data();
            for (std::size_t i = 0; i < total[t].size(); ++i) dst[i] += src[i];
          }
        }
      }
      const Real inv = Real{1} / static_cast<Real>(end - start);
      for (auto& t : total) {
        for (auto& v : t.values()) v *= inv;
      }
      sgd_step(params, total, lr, hyper.clip_norm);
    }

    EpochLog e;
    e.epoch = epoch;
    e.learning_rate = lr;
    e.train_perplexity = std::exp(train_nll / static_cast<double>(train_tokens));
    e.valid_perplexity = params.all_finite() ? corpus_perplexity(params, valid_set)
                                             : std::numeric_limits<double>::infinity();
    e.improved = e.valid_perplexity < best;
    if (e.improved) {
      best = e.valid_perplexity;
      result.params = params;
      result.log.best_epoch = epoch;
      since_best = 0;
    } else {
      ++since_best;
      if (options.lr_decay > 1.0) lr /= options.lr_decay;
      // Continue from the best weights rather than the regressed ones.
      params = result.params;
    }
    e.best_valid_perplexity = best;
    result.log.epochs.push_back(e);
    if (on_epoch) on_epoch(e);
    if (since_best >= options.early_stop_patience && options.early_stop_patience > 0) {
      result.log.stopped_early = epoch < options.epochs;
      break;
    }
  }
  return result;
}

template double corpus_perplexity<float>(const ModelParameters<float>&, const std::vector<Sentence>&);
template double corpus_perplexity<double>(const ModelParameters<double>&, const std::vector<Sentence>&);
template TrainResult<float> train_base_model<float>(const std::vector<Sentence>&, const std::vector<Sentence>&,
                                                    std::size_t, const HyperParams&, const TrainOptions&,
                                                    const std::function<void(const EpochLog&)>&);
template TrainResult<double> train_base_model<double>(const std::vector<Sentence>&, const std::vector<Sentence>&,
                                                      std::size_t, const HyperParams&, const TrainOptions&,
                                                      const std::function<void(const EpochLog&)>&);

}  // namespace adaptlm::lm
