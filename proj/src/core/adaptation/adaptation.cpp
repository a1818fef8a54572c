#include "adaptation/adaptation.hpp"

#include <bit>
#include <cmath>

#include "corpus/synthetic.hpp"
#include "error.hpp"

namespace adaptlm::adaptation {

const char* to_string(RevertPolicy p) { return p == RevertPolicy::per_text ? "per_text" : "never"; }
const char* to_string(StatePolicy p) {
  return p == StatePolicy::carry_within_text ? "carry_within_text" : "reset_each_sentence";
}

RevertPolicy revert_policy_from_string(const std::string& s) {
  if (s == "per_text") return RevertPolicy::per_text;
  if (s == "never") return RevertPolicy::never;
  fail(ErrorKind::usage, "revert_policy must be per_text or never, got '" + s + "'");
}

StatePolicy state_policy_from_string(const std::string& s) {
  if (s == "carry_within_text") return StatePolicy::carry_within_text;
  if (s == "reset_each_sentence") return StatePolicy::reset_each_sentence;
  fail(ErrorKind::usage, "state_policy must be carry_within_text or reset_each_sentence, got '" + s + "'");
}

void AdaptationConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    fail(ErrorKind::usage, "learning_rate must be a finite value >= 0");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) fail(ErrorKind::usage, "dropout_rate must be in [0, 1)");
  if (clip_norm && !(*clip_norm > 0.0)) fail(ErrorKind::usage, "clip_norm must be positive or off");
}

template <typename Real>
Fingerprint parameters_fingerprint(const ModelParameters<Real>& params) {
  std::string bytes;
  for (const auto& t : params.tensors) {
    for (Real v : t.values()) {
      const auto bits = std::bit_cast<std::conditional_t<sizeof(Real) == 4, std::uint32_t, std::uint64_t>>(v);
      for (std::size_t b = 0; b < sizeof bits; ++b) bytes.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
    }
  }
  return sha256(bytes);
}

template <typename Real>
Snapshot<Real>::Snapshot(std::string label, ModelParameters<Real> params, Fingerprint source_fingerprint)
    : label_(std::move(label)), source_(source_fingerprint) {
  params.check_layout();
  weights_ = parameters_fingerprint(params);
  params_ = std::make_shared<const ModelParameters<Real>>(std::move(params));
}

template <typename Real>
AdaptiveModel<Real>::AdaptiveModel(const Snapshot<Real>& base, AdaptationConfig config)
    : params_(base.params()), config_(config) {
  config_.validate();
  begin_text();
}

template <typename Real>
void AdaptiveModel<Real>::begin_text() {
  state_ = LstmState<Real>::zeros(params_.num_layers, params_.hidden_size);
}

template <typename Real>
void AdaptiveModel<Real>::revert(const Snapshot<Real>& snapshot) {
  params_ = snapshot.params();
  diverged_ = false;
  begin_text();
}

template <typename Real>
void AdaptiveModel<Real>::set_learning_rate(double learning_rate) {
  AdaptationConfig next = config_;
  next.learning_rate = learning_rate;
  next.validate();
  config_ = next;
}

template <typename Real>
void AdaptiveModel<Real>::advance(LstmState<Real> final_state) {
  if (config_.state_policy == StatePolicy::carry_within_text) {
    state_ = std::move(final_state);
  } else {
    begin_text();
  }
}

namespace {

template <typename Real>
std::vector<double> widen(const std::vector<Real>& v) {
  return std::vector<double>(v.begin(), v.end());
}

}  // namespace

template <typename Real>
std::vector<double> AdaptiveModel<Real>::peek(std::span<const TokenId> sentence) const {
  lm::ForwardOptions eval;
  eval.reduction = config_.loss_reduction;
  return widen(lm::forward_sentence(params_, sentence, state_, eval).target_log_probs);
}

template <typename Real>
std::vector<double> AdaptiveModel<Real>::score(std::span<const TokenId> sentence) {
  lm::ForwardOptions eval;
  eval.reduction = config_.loss_reduction;
  auto pass = lm::forward_sentence(params_, sentence, state_, eval);
  advance(std::move(pass.final_state));
  return widen(pass.target_log_probs);
}

template <typename Real>
SentenceOutcome AdaptiveModel<Real>::adapt_on_sentence(std::span<const TokenId> sentence) {
  lm::ForwardOptions eval;
  eval.reduction = config_.loss_reduction;
  SentenceOutcome out;
  auto pass = lm::forward_sentence(params_, sentence, state_, eval);
  out.loss = static_cast<double>(pass.tape.value(pass.loss)[0]);
  out.target_log_probs = widen(pass.target_log_probs);

  if (config_.learning_rate != 0.0) {
    std::vector<numerics::Tensor<Real>> grads;
    if (config_.update_with_dropout) {
      lm::ForwardOptions train = eval;
      train.mode = lm::Mode::train;
      train.dropout_rate = config_.dropout_rate;
      train.dropout_seed = corpus::derive_seed(config_.seed, updates_);
      auto noisy = lm::forward_sentence(params_, sentence, state_, train);
      grads = noisy.tape.backward(noisy.loss);
    } else {
      grads = pass.tape.backward(pass.loss);
    }
    out.step = lm::sgd_step(params_, grads, config_.learning_rate, config_.clip_norm);
    ++updates_;
    if (out.step.non_finite_weights) diverged_ = true;
  }
  out.diverged = diverged_;
  advance(std::move(pass.final_state));
  return out;
}

#define ADAPTLM_INSTANTIATE(R)                                                       \
  template Fingerprint parameters_fingerprint<R>(const ModelParameters<R>&);         \
  template class Snapshot<R>;                                                        \
  template class AdaptiveModel<R>;

ADAPTLM_INSTANTIATE(float)
ADAPTLM_INSTANTIATE(double)
#undef ADAPTLM_INSTANTIATE

}  // namespace adaptlm::adaptation
