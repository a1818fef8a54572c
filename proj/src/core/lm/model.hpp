#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "numerics/tape.hpp"
#include "numerics/tensor.hpp"
#include "token.hpp"

namespace adaptlm::lm {

using numerics::Tape;
using numerics::Tensor;
using numerics::Var;

enum class LossReduction { mean, sum };
enum class Mode { train, eval };

const char* to_string(LossReduction r);
LossReduction loss_reduction_from_string(const std::string& s);

struct HyperParams {
  std::size_t num_layers = 2;
  std::size_t hidden_size = 64;
  std::size_t embed_size = 64;
  double dropout_rate = 0.2;
  std::optional<double> clip_norm = 0.25;  // nullopt = clipping off
  double base_learning_rate = 20.0;
  std::uint64_t seed = 1;
  LossReduction loss_reduction = LossReduction::mean;

  // Throws Error(usage) naming the offending field.
  void validate() const;
  friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

// All trainable weights. `tensors` holds them in the serialization order:
//   embedding (V x d)
//   per layer l: input_weights (4h x in_l), recurrent_weights (4h x h), bias (4h x 1)
//   output_weights (V x h), output_bias (V x 1)
// Gate rows within each 4h block are stacked as (input, forget, candidate, output).
template <typename Real>
struct ModelParameters {
  std::size_t vocab_size = 0;
  std::size_t embed_size = 0;
  std::size_t hidden_size = 0;
  std::size_t num_layers = 0;
  std::vector<Tensor<Real>> tensors;

  static std::size_t tensor_count(std::size_t layers) { return 3 * layers + 3; }

  Tensor<Real>& embedding() { return tensors[0]; }
  const Tensor<Real>& embedding() const { return tensors[0]; }
  Tensor<Real>& input_weights(std::size_t l) { return tensors[1 + 3 * l]; }
  const Tensor<Real>& input_weights(std::size_t l) const { return tensors[1 + 3 * l]; }
  Tensor<Real>& recurrent_weights(std::size_t l) { return tensors[2 + 3 * l]; }
  const Tensor<Real>& recurrent_weights(std::size_t l) const { return tensors[2 + 3 * l]; }
  Tensor<Real>& bias(std::size_t l) { return tensors[3 + 3 * l]; }
  const Tensor<Real>& bias(std::size_t l) const { return tensors[3 + 3 * l]; }
  Tensor<Real>& output_weights() { return tensors[1 + 3 * num_layers]; }
  const Tensor<Real>& output_weights() const { return tensors[1 + 3 * num_layers]; }
  Tensor<Real>& output_bias() { return tensors[2 + 3 * num_layers]; }
  const Tensor<Real>& output_bias() const { return tensors[2 + 3 * num_layers]; }

  std::size_t input_dim(std::size_t l) const { return l == 0 ? embed_size : hidden_size; }
  std::vector<std::string> tensor_names() const;
  std::size_t coordinate_count() const;
  bool all_finite() const;
  // Throws Error(format) if the tensor list does not match the dimensions.
  void check_layout() const;

  friend bool operator==(const ModelParameters&, const ModelParameters&) = default;
};

template <typename Real>
struct LstmState {
  std::vector<Tensor<Real>> h;  // per layer, hidden_size x 1
  std::vector<Tensor<Real>> c;

  static LstmState zeros(std::size_t layers, std::size_t hidden);
  bool all_finite() const;
  friend bool operator==(const LstmState&, const LstmState&) = default;
};

template <typename Real>
ModelParameters<Real> init_parameters(const HyperParams& hyper, std::size_t vocab_size);

// One LSTM cell update for `layer`; returns (h', updated state).
template <typename Real>
std::pair<Tensor<Real>, LstmState<Real>> lstm_step(const ModelParameters<Real>& params, std::size_t layer,
                                                   const Tensor<Real>& input, const LstmState<Real>& state);

struct ForwardOptions {
  Mode mode = Mode::eval;
  LossReduction reduction = LossReduction::mean;
  double dropout_rate = 0.0;  // used only in train mode
  std::uint64_t dropout_seed = 0;
};

// Taped pass over one sentence. The input is fed as <s> w_1 ... w_n and the
// targets are w_1 ... w_n </s>, so row i of log_probs conditions only on the
// incoming state and tokens before targets[i]. The tape references `params`,
// which must stay untouched until any backward() call is done.
template <typename Real>
struct ForwardPass {
  Tape<Real> tape;
  Tensor<Real> log_probs;  // (n + 1) x V
  std::vector<TokenId> targets;
  std::vector<Real> target_log_probs;
  Var loss;
  LstmState<Real> final_state;
};

template <typename Real>
ForwardPass<Real> forward_sentence(const ModelParameters<Real>& params, std::span<const TokenId> tokens,
                                   const LstmState<Real>& state, const ForwardOptions& options = {});

template <typename Real>
Real sentence_loss(const Tensor<Real>& log_probs, std::span<const TokenId> targets,
                   LossReduction reduction = LossReduction::mean);

template <typename Real>
struct SentenceGradient {
  Real loss = 0;  // computed before any update
  std::vector<Tensor<Real>> gradients;
  std::vector<Real> target_log_probs;
  LstmState<Real> final_state;
};

template <typename Real>
SentenceGradient<Real> sentence_gradient(const ModelParameters<Real>& params, std::span<const TokenId> tokens,
                                         const LstmState<Real>& state, const ForwardOptions& options = {});

struct StepReport {
  double grad_norm = 0.0;
  double clip_scale = 1.0;
  bool clipped = false;
  bool non_finite_gradient = false;
  bool non_finite_weights = false;
};

// theta <- theta - lr * g, after optional global-norm clipping. lr == 0 leaves
// the parameters untouched. Non-finite gradients are applied and reported.
template <typename Real>
StepReport sgd_step(ModelParameters<Real>& params, const std::vector<Tensor<Real>>& gradients, double learning_rate,
                    std::optional<double> clip_norm);

}  // namespace adaptlm::lm
