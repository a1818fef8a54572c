#include "lm/model.hpp"

#include <cmath>
#include <random>
#include <tuple>

#include "error.hpp"

namespace adaptlm::lm {

const char* to_string(LossReduction r) { return r == LossReduction::mean ? "mean" : "sum"; }

LossReduction loss_reduction_from_string(const std::string& s) {
  if (s == "mean") return LossReduction::mean;
  if (s == "sum") return LossReduction::sum;
  fail(ErrorKind::usage, "loss_reduction must be 'mean' or 'sum', got '" + s + "'");
}

void HyperParams::validate() const {
  if (num_layers < 1) fail(ErrorKind::usage, "num_layers must be >= 1");
  if (hidden_size < 1) fail(ErrorKind::usage, "hidden_size must be >= 1");
  if (embed_size < 1) fail(ErrorKind::usage, "embed_size must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    fail(ErrorKind::usage, "dropout_rate must lie in [0, 1), got " + std::to_string(dropout_rate));
  }
  if (clip_norm && !(*clip_norm > 0.0)) fail(ErrorKind::usage, "clip_norm must be positive or off");
  if (!(base_learning_rate > 0.0)) fail(ErrorKind::usage, "base_learning_rate must be positive");
}

template <typename Real>
std::vector<std::string> ModelParameters<Real>::tensor_names() const {
  std::vector<std::string> names{"embedding"};
  for (std::size_t l = 0; l < num_layers; ++l) {
    const auto p = "layer" + std::to_string(l) + ".";
    names.push_back(p + "input_weights");
    names.push_back(p + "recurrent_weights");
    names.push_back(p + "bias");
  }
  names.emplace_back("output_weights");
  names.emplace_back("output_bias");
  return names;
}

template <typename Real>
std::size_t ModelParameters<Real>::coordinate_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.size();
  return n;
}

template <typename Real>
bool ModelParameters<Real>::all_finite() const {
  for (const auto& t : tensors) {
    if (!t.all_finite()) return false;
  }
  return true;
}

template <typename Real>
void ModelParameters<Real>::check_layout() const {
  if (tensors.size() != tensor_count(num_layers)) {
    fail(ErrorKind::format, "expected " + std::to_string(tensor_count(num_layers)) + " parameter tensors, found " +
                                std::to_string(tensors.size()));
  }
  const auto names = tensor_names();
  auto expect = [&](std::size_t idx, std::size_t r, std::size_t c) {
    if (tensors[idx].rows() != r || tensors[idx].cols() != c) {
      fail(ErrorKind::format, names[idx] + " has shape " + tensors[idx].shape_string() + ", expected " +
                                  std::to_string(r) + "x" + std::to_string(c));
    }
  };
  const std::size_t h4 = 4 * hidden_size;
  expect(0, vocab_size, embed_size);
  for (std::size_t l = 0; l < num_layers; ++l) {
    expect(1 + 3 * l, h4, input_dim(l));
    expect(2 + 3 * l, h4, hidden_size);
    expect(3 + 3 * l, h4, 1);
  }
  expect(1 + 3 * num_layers, vocab_size, hidden_size);
  expect(2 + 3 * num_layers, vocab_size, 1);
}

template <typename Real>
LstmState<Real> LstmState<Real>::zeros(std::size_t layers, std::size_t hidden) {
  LstmState s;
  s.h.assign(layers, Tensor<Real>(hidden, 1));
  s.c.assign(layers, Tensor<Real>(hidden, 1));
  return s;
}

template <typename Real>
bool LstmState<Real>::all_finite() const {
  for (const auto& t : h) {
    if (!t.all_finite()) return false;
  }
  for (const auto& t : c) {
    if (!t.all_finite()) return false;
  }
  return true;
}

namespace {

// Uniform double in [0, 1) from the top 53 bits; independent of <random>
// distribution implementations.
double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

template <typename Real>
struct TapedLayer {
  Var input_weights, recurrent_weights, bias;
};

template <typename Real>
struct TapedParams {
  Var embedding;
  std::vector<TapedLayer<Real>> layers;
  Var output_weights, output_bias;
};

template <typename Real>
TapedParams<Real> register_parameters(Tape<Real>& tape, const ModelParameters<Real>& p) {
  TapedParams<Real> t;
  t.embedding = tape.parameter(p.embedding());
  for (std::size_t l = 0; l < p.num_layers; ++l) {
    TapedLayer<Real> layer;
    layer.input_weights = tape.parameter(p.input_weights(l));
    layer.recurrent_weights = tape.parameter(p.recurrent_weights(l));
    layer.bias = tape.parameter(p.bias(l));
    t.layers.push_back(layer);
  }
  t.output_weights = tape.parameter(p.output_weights());
  t.output_bias = tape.parameter(p.output_bias());
  return t;
}

template <typename Real>
std::pair<Var, Var> taped_cell(Tape<Real>& tape, const TapedLayer<Real>& w, std::size_t hidden, Var x, Var h, Var c) {
  Var z = tape.add(tape.add(tape.matmul(w.input_weights, x), tape.matmul(w.recurrent_weights, h)), w.bias);
  Var in_gate = tape.sigmoid(tape.slice_rows(z, 0, hidden));
  Var forget_gate = tape.sigmoid(tape.slice_rows(z, hidden, hidden));
  Var candidate = tape.tanh(tape.slice_rows(z, 2 * hidden, hidden));
  Var out_gate = tape.sigmoid(tape.slice_rows(z, 3 * hidden, hidden));
  Var c_next = tape.add(tape.mul(forget_gate, c), tape.mul(in_gate, candidate));
  Var h_next = tape.mul(out_gate, tape.tanh(c_next));
  return {h_next, c_next};
}

template <typename Real>
Tensor<Real> dropout_mask(std::size_t n, double rate, std::mt19937_64& rng) {
  Tensor<Real> mask(n, 1);
  const Real keep_scale = static_cast<Real>(1.0 / (1.0 - rate));
  for (std::size_t i = 0; i < n; ++i) mask[i] = unit_uniform(rng) < rate ? Real{0} : keep_scale;
  return mask;
}

}  // namespace

template <typename Real>
ModelParameters<Real> init_parameters(const HyperParams& hyper, std::size_t vocab_size) {
  hyper.validate();
  if (vocab_size <= kReservedCount) fail(ErrorKind::usage, "vocabulary must contain at least one ordinary token");
  ModelParameters<Real> p;
  p.vocab_size = vocab_size;
  p.embed_size = hyper.embed_size;
  p.hidden_size = hyper.hidden_size;
  p.num_layers = hyper.num_layers;
  const std::size_t h4 = 4 * hyper.hidden_size;
  p.tensors.emplace_back(vocab_size, hyper.embed_size);
  for (std::size_t l = 0; l < hyper.num_layers; ++l) {
    p.tensors.emplace_back(h4, p.input_dim(l));
    p.tensors.emplace_back(h4, hyper.hidden_size);
    p.tensors.emplace_back(h4, 1);
  }
  p.tensors.emplace_back(vocab_size, hyper.hidden_size);
  p.tensors.emplace_back(vocab_size, 1);

  std::mt19937_64 rng(hyper.seed);
  for (auto& t : p.tensors) {
    for (auto& v : t.values()) v = static_cast<Real>(-0.1 + 0.2 * unit_uniform(rng));
  }
  return p;
}

template <typename Real>
std::pair<Tensor<Real>, LstmState<Real>> lstm_step(const ModelParameters<Real>& params, std::size_t layer,
                                                   const Tensor<Real>& input, const LstmState<Real>& state) {
  if (layer >= params.num_layers) {
    fail(ErrorKind::shape, "lstm_step: layer " + std::to_string(layer) + " out of range");
  }
  if (input.rows() != params.input_dim(layer) || input.cols() != 1) {
    fail(ErrorKind::shape, "lstm_step: input " + input.shape_string() + " does not match layer input dimension " +
                               std::to_string(params.input_dim(layer)));
  }
  if (state.h.size() != params.num_layers || state.c.size() != params.num_layers ||
      state.h[layer].rows() != params.hidden_size || state.c[layer].rows() != params.hidden_size) {
    fail(ErrorKind::shape, "lstm_step: state does not match model dimensions");
  }
  Tape<Real> tape;
  TapedLayer<Real> w{tape.parameter(params.input_weights(layer)), tape.parameter(params.recurrent_weights(layer)),
                     tape.parameter(params.bias(layer))};
  auto [h, c] = taped_cell(tape, w, params.hidden_size, tape.constant(input), tape.constant(state.h[layer]),
                           tape.constant(state.c[layer]));
  LstmState<Real> next = state;
  next.h[layer] = tape.value(h);
  next.c[layer] = tape.value(c);
  return {tape.value(h), std::move(next)};
}

template <typename Real>
ForwardPass<Real> forward_sentence(const ModelParameters<Real>& params, std::span<const TokenId> tokens,
                                   const LstmState<Real>& state, const ForwardOptions& options) {
  if (tokens.empty()) fail(ErrorKind::invalid_argument, "forward_sentence: empty sentence");
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] >= params.vocab_size) {
      fail(ErrorKind::invalid_argument, "forward_sentence: token id " + std::to_string(tokens[i]) + " at position " +
                                            std::to_string(i) + " is outside the vocabulary (size " +
                                            std::to_string(params.vocab_size) + ")");
    }
  }
  if (state.h.size() != params.num_layers || state.c.size() != params.num_layers) {
    fail(ErrorKind::shape, "forward_sentence: state has wrong number of layers");
  }

  ForwardPass<Real> out;
  Tape<Real>& tape = out.tape;
  const TapedParams<Real> w = register_parameters(tape, params);
  const bool use_dropout = options.mode == Mode::train && options.dropout_rate > 0.0;
  std::mt19937_64 rng(options.dropout_seed);

  std::vector<Var> h(params.num_layers), c(params.num_layers);
  for (std::size_t l = 0; l < params.num_layers; ++l) {
    h[l] = tape.constant(state.h[l]);
    c[l] = tape.constant(state.c[l]);
  }

  out.targets.assign(tokens.begin(), tokens.end());
  out.targets.push_back(kEosId);
  const std::size_t steps = out.targets.size();
  out.log_probs = Tensor<Real>(steps, params.vocab_size);
  out.target_log_probs.reserve(steps);

  Var total;
  TokenId input = kBosId;
  for (std::size_t t = 0; t < steps; ++t) {
    Var x = tape.gather_row(w.embedding, input);
    if (use_dropout) x = tape.mul(x, tape.constant(dropout_mask<Real>(params.embed_size, options.dropout_rate, rng)));
    for (std::size_t l = 0; l < params.num_layers; ++l) {
      std::tie(h[l], c[l]) = taped_cell(tape, w.layers[l], params.hidden_size, x, h[l], c[l]);
      x = h[l];
      if (use_dropout) {
        x = tape.mul(x, tape.constant(dropout_mask<Real>(params.hidden_size, options.dropout_rate, rng)));
      }
    }
    Var logits = tape.add(tape.matmul(w.output_weights, x), w.output_bias);
    Var logp = tape.log_softmax(logits);
    const auto& lp = tape.value(logp);
    std::copy(lp.values().begin(), lp.values().end(), out.log_probs.data() + t * params.vocab_size);
    const TokenId target = out.targets[t];
    Var picked = tape.pick(logp, target);
    out.target_log_probs.push_back(lp[target]);
    total = t == 0 ? picked : tape.add(total, picked);
    input = target;
  }
  const Real factor = options.reduction == LossReduction::mean ? Real{-1} / static_cast<Real>(steps) : Real{-1};
  out.loss = tape.scale(total, factor);

  out.final_state = LstmState<Real>::zeros(params.num_layers, params.hidden_size);
  for (std::size_t l = 0; l < params.num_layers; ++l) {
    out.final_state.h[l] = tape.value(h[l]);
    out.final_state.c[l] = tape.value(c[l]);
  }
  return out;
}

template <typename Real>
Real sentence_loss(const Tensor<Real>& log_probs, std::span<const TokenId> targets, LossReduction reduction) {
  if (log_probs.rows() != targets.size()) {
    fail(ErrorKind::shape, "sentence_loss: " + std::to_string(log_probs.rows()) + " rows for " +
                               std::to_string(targets.size()) + " targets");
  }
  Real total{0};
  for (std::size_t i = 0; i < targets.size(); ++i) total -= log_probs(i, targets[i]);
  return reduction == LossReduction::mean ? total / static_cast<Real>(targets.size()) : total;
}

template <typename Real>
SentenceGradient<Real> sentence_gradient(const ModelParameters<Real>& params, std::span<const TokenId> tokens,
                                         const LstmState<Real>& state, const ForwardOptions& options) {
  auto pass = forward_sentence(params, tokens, state, options);
  SentenceGradient<Real> g;
  g.loss = pass.tape.value(pass.loss)[0];
  g.gradients = pass.tape.backward(pass.loss);
  g.target_log_probs = std::move(pass.target_log_probs);
  g.final_state = std::move(pass.final_state);
  return g;
}

template <typename Real>
StepReport sgd_step(ModelParameters<Real>& params, const std::vector<Tensor<Real>>& gradients, double learning_rate,
                    std::optional<double> clip_norm) {
  if (gradients.size() != params.tensors.size()) {
    fail(ErrorKind::shape, "sgd_step: " + std::to_string(gradients.size()) + " gradients for " +
                               std::to_string(params.tensors.size()) + " parameter tensors");
  }
  for (std::size_t i = 0; i < gradients.size(); ++i) {
    if (!gradients[i].same_shape(params.tensors[i])) {
      fail(ErrorKind::shape, "sgd_step: gradient " + gradients[i].shape_string() + " vs parameter " +
                                 params.tensors[i].shape_string());
    }
  }
  StepReport report;
  double sq = 0.0;
  for (const auto& g : gradients) sq += numerics::squared_norm(g);
  report.grad_norm = std::sqrt(sq);
  report.non_finite_gradient = !std::isfinite(report.grad_norm);

  if (learning_rate == 0.0) {
    report.non_finite_weights = !params.all_finite();
    return report;
  }
  if (clip_norm && report.non_finite_gradient) {
    // No meaningful rescaling exists; leave the weights alone.
    report.clip_scale = 0.0;
    report.clipped = true;
    report.non_finite_weights = !params.all_finite();
    return report;
  }
  if (clip_norm && report.grad_norm > *clip_norm) {
    report.clip_scale = *clip_norm / report.grad_norm;
    report.clipped = true;
  }
  const Real step = static_cast<Real>(learning_rate * report.clip_scale);
  for (std::size_t t = 0; t < gradients.size(); ++t) {
    Real* p = params.tensors[t].data();
    const Real* g = gradients[t].data();
    const std::size_t n = gradients[t].size();
    for (std::size_t i = 0; i < n; ++i) p[i] -= step * g[i];
  }
  report.non_finite_weights = !params.all_finite();
  return report;
}

#define ADAPTLM_INSTANTIATE(R)                                                                                     \
  template struct ModelParameters<R>;                                                                              \
  template struct LstmState<R>;                                                                                    \
  template ModelParameters<R> init_parameters<R>(const HyperParams&, std::size_t);                                 \
  template std::pair<Tensor<R>, LstmState<R>> lstm_step<R>(const ModelParameters<R>&, std::size_t,                 \
                                                           const Tensor<R>&, const LstmState<R>&);                 \
  template ForwardPass<R> forward_sentence<R>(const ModelParameters<R>&, std::span<const TokenId>,                 \
                                              const LstmState<R>&, const ForwardOptions&);                        \
  template R sentence_loss<R>(const Tensor<R>&, std::span<const TokenId>, LossReduction);                          \
  template SentenceGradient<R> sentence_gradient<R>(const ModelParameters<R>&, std::span<const TokenId>,           \
                                                    const LstmState<R>&, const ForwardOptions&);                  \
  template StepReport sgd_step<R>(ModelParameters<R>&, const std::vector<Tensor<R>>&, double, std::optional<double>);

ADAPTLM_INSTANTIATE(float)
ADAPTLM_INSTANTIATE(double)
#undef ADAPTLM_INSTANTIATE

}  // namespace adaptlm::lm
