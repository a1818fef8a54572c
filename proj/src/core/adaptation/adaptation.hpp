#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fingerprint.hpp"
#include "lm/model.hpp"
#include "lm/training.hpp"

namespace adaptlm::adaptation {

using lm::LstmState;
using lm::ModelParameters;
using lm::Sentence;

enum class RevertPolicy { per_text, never };
enum class StatePolicy { carry_within_text, reset_each_sentence };

const char* to_string(RevertPolicy p);
const char* to_string(StatePolicy p);
RevertPolicy revert_policy_from_string(const std::string& s);
StatePolicy state_policy_from_string(const std::string& s);

// Best mid-grid rate of the dative sweep for the default desk-scale model.
inline constexpr double kDefaultAdaptationRate = 0.2;

struct AdaptationConfig {
  double learning_rate = kDefaultAdaptationRate;  // 0 is the non-adaptive control
  RevertPolicy revert_policy = RevertPolicy::per_text;
  StatePolicy state_policy = StatePolicy::carry_within_text;
  bool update_with_dropout = false;
  double dropout_rate = 0.2;           // only with update_with_dropout
  std::optional<double> clip_norm;     // off by default
  lm::LossReduction loss_reduction = lm::LossReduction::mean;
  std::uint64_t seed = 1;              // dropout masks

  void validate() const;
};

template <typename Real>
Fingerprint parameters_fingerprint(const ModelParameters<Real>& params);

// Immutable copy of a full set of weights. Copies share storage.
template <typename Real>
class Snapshot {
 public:
  Snapshot(std::string label, ModelParameters<Real> params, Fingerprint source_fingerprint = {});

  const std::string& label() const { return label_; }
  const ModelParameters<Real>& params() const { return *params_; }
  const Fingerprint& source_fingerprint() const { return source_; }
  const Fingerprint& weights_fingerprint() const { return weights_; }

 private:
  std::string label_;
  std::shared_ptr<const ModelParameters<Real>> params_;
  Fingerprint source_{};
  Fingerprint weights_{};
};

struct SentenceOutcome {
  double loss = 0.0;                     // from the pre-update weights
  std::vector<double> target_log_probs;  // pre-update, eval mode; last entry is </s>
  lm::StepReport step;
  bool diverged = false;                 // weights non-finite after this update
};

// A working copy of the weights plus the recurrent state that adaptation
// carries from sentence to sentence.
template <typename Real>
class AdaptiveModel {
 public:
  AdaptiveModel(const Snapshot<Real>& base, AdaptationConfig config);

  // Scores with the current weights, then takes exactly one SGD step on that
  // sentence's loss.
  SentenceOutcome adapt_on_sentence(std::span<const TokenId> sentence);
  // Scores without updating; the state advances as for adapt_on_sentence.
  std::vector<double> score(std::span<const TokenId> sentence);
  // Scores from the current state without touching it.
  std::vector<double> peek(std::span<const TokenId> sentence) const;

  void begin_text();  // zero state
  void revert(const Snapshot<Real>& snapshot);
  // Weights and state are kept.
  void set_learning_rate(double learning_rate);

  const ModelParameters<Real>& params() const { return params_; }
  const LstmState<Real>& state() const { return state_; }
  const AdaptationConfig& config() const { return config_; }
  bool diverged() const { return diverged_; }
  std::size_t updates() const { return updates_; }

 private:
  void advance(LstmState<Real> final_state);

  ModelParameters<Real> params_;
  LstmState<Real> state_;
  AdaptationConfig config_;
  bool diverged_ = false;
  std::size_t updates_ = 0;
};

}  // namespace adaptlm::adaptation
