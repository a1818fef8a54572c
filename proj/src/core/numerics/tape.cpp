#include "numerics/tape.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

namespace adaptlm::numerics {

namespace {

std::atomic<std::uint64_t> next_tape_id{1};

template <typename Real>
Real stable_sigmoid(Real x) {
  if (x >= Real{0}) {
    return Real{1} / (Real{1} + std::exp(-x));
  }
  const Real e = std::exp(x);
  return e / (Real{1} + e);
}

template <typename Real>
void accumulate(Tensor<Real>& into, const Tensor<Real>& like) {
  if (into.empty() && !like.empty()) into = Tensor<Real>(like.rows(), like.cols());
}

std::string shapes(const char* op, std::string a, std::string b) {
  return std::string(op) + ": shape mismatch " + a + " vs " + b;
}

}  // namespace

template <typename Real>
Tape<Real>::Tape() : id_(next_tape_id.fetch_add(1)) {}

template <typename Real>
bool Tape<Real>::owns(Var v) const noexcept {
  return v.tape_id == id_ && v.index < nodes_.size();
}

template <typename Real>
const typename Tape<Real>::Node& Tape<Real>::node(Var v, const char* op_name) const {
  if (!owns(v)) {
    fail(ErrorKind::invalid_argument, std::string(op_name) + ": variable is not recorded on this tape");
  }
  return nodes_[v.index];
}

template <typename Real>
Var Tape<Real>::push(Node n) {
  if (nodes_.size() >= Var::kInvalid) fail(ErrorKind::invalid_argument, "tape overflow");
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1), id_};
}

template <typename Real>
const Tensor<Real>& Tape<Real>::value(Var v) const {
  return node(v, "value").value();
}

template <typename Real>
Var Tape<Real>::parameter(const Tensor<Real>& value) {
  Node n;
  n.op = Op::parameter;
  n.requires_grad = true;
  n.external = &value;
  Var v = push(std::move(n));
  parameter_nodes_.push_back(v.index);
  return v;
}

template <typename Real>
Var Tape<Real>::constant(Tensor<Real> value) {
  Node n;
  n.op = Op::constant;
  n.owned = std::move(value);
  return push(std::move(n));
}

template <typename Real>
Var Tape<Real>::matmul(Var a, Var b) {
  const Node& na = node(a, "matmul");
  const Node& nb = node(b, "matmul");
  const Tensor<Real>& A = na.value();
  const Tensor<Real>& B = nb.value();
  if (A.cols() != B.rows()) fail(ErrorKind::shape, shapes("matmul", A.shape_string(), B.shape_string()));
  const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
  Tensor<Real> C(m, n);
  if (n == 1) {
    const Real* x = B.data();
    for (std::size_t i = 0; i < m; ++i) {
      const Real* row = A.data() + i * k;
      Real acc{0};
      for (std::size_t p = 0; p < k; ++p) acc += row[p] * x[p];
      C[i] = acc;
    }
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      Real* out = C.data() + i * n;
      for (std::size_t p = 0; p < k; ++p) {
        const Real aip = A(i, p);
        const Real* brow = B.data() + p * n;
        for (std::size_t j = 0; j < n; ++j) out[j] += aip * brow[j];
      }
    }
  }
  Node out;
  out.op = Op::matmul;
  out.a = a.index;
  out.b = b.index;
  out.requires_grad = na.requires_grad || nb.requires_grad;
  out.owned = std::move(C);
  return push(std::move(out));
}

template <typename Real>
Var Tape<Real>::add(Var a, Var b) {
  const Node& na = node(a, "add");
  const Node& nb = node(b, "add");
  const Tensor<Real>& A = na.value();
  const Tensor<Real>& B = nb.value();
  if (!A.same_shape(B)) fail(ErrorKind::shape, shapes("add", A.shape_string(), B.shape_string()));
  Tensor<Real> C = A;
  for (std::size_t i = 0; i < C.size(); ++i) C[i] += B[i];
  Node out;
  out.op = Op::add;
  out.a = a.index;
  out.b = b.index;
  out.requires_grad = na.requires_grad || nb.requires_grad;
  out.owned = std::move(C);
  return push(std::move(out));
}

template <typename Real>
Var Tape<Real>::mul(Var a, Var b) {
  const Node& na = node(a, "mul");
  const Node& nb = node(b, "mul");
  const Tensor<Real>& A = na.value();
  const Tensor<Real>& B = nb.value();
  if (!A.same_shape(B)) fail(ErrorKind::shape, shapes("mul", A.shape_string(), B.shape_string()));
  Tensor<Real> C = A;
  for (std::size_t i = 0; i < C.size(); ++i) C[i] *= B[i];
  Node out;
  out.op = Op::mul;
  out.a = a.index;
  out.b = b.index;
  out.requires_grad = na.requires_grad || nb.requires_grad;
  out.owned = std::move(C);
  return push(std::move(out));
}

template <typename Real>
Var Tape<Real>::sigmoid(Var a) {
  const Node& na = node(a, "sigmoid");
  Tensor<Real> y = na.value();
  for (auto& v : y.values()) v = stable_sigmoid(v);
  Node out;
  out.op = Op::sigmoid;
  out.a = a.index;
  out.requires_grad = na.requires_grad;
  out.owned = std::move(y);
  return push(std::move(out));
}

template <typename Real>
Var Tape<Real>::tanh(Var a) {
  const Node& na = node(a, "tanh");
  Tensor<Real> y = na.value();
  for (auto& v : y.values()) v = std::tanh(v);
  Node out;
  out.op = Op::tanh;
  out.a = a.index;
  out.requires_grad = na.requires_grad;
  out.owned = std::move(y);
  return push(std::move(out));
}

template <typename Real>
Var Tape<Real>::elementwise(ElementwiseOp kind, std::span<const Var> args) {
  const std::size_t arity = (kind == ElementwiseOp::add || kind == ElementwiseOp::mul) ? 2 : 1;
  if (args.size() != arity) {
    fail(ErrorKind::invalid_argument, "elementwise: expected " + std::to_string(arity) +
                                          " argument(s), got " + std::to_string(args.size()));
  }
  switch (kind) {
    case ElementwiseOp::sigmoid: return sigmoid(args[0]);
    case ElementwiseOp::tanh: return tanh(args[0]);
    case ElementwiseOp::add: return add(args[0], args[1]);
    case ElementwiseOp::mul: return mul(args[0], args[1]);
  }
  fail(ErrorKind::invalid_argument, "elementwise: unknown op");
}

template <typename Real>
Var Tape<Real>::log_softmax(Var a) {
  const Node& na = node(a, "log_softmax");
  const Tensor<Real>& x = na.value();
  if (x.empty()) fail(ErrorKind::invalid_argument, "log_softmax: empty input");
  if (!x.is_vector()) fail(ErrorKind::shape, "log_softmax: expected a vector, got " + x.shape_string());
  const Real m = *std::max_element(x.values().begin(), x.values().end());
  Real total{0};
  for (Real v : x.values()) total += std::exp(v - m);
  const Real lse = m + std::log(total);
  Tensor<Real> y = x;
  for (auto& v : y.values()) v -= lse;
  Node out;
  out.op = Op::log_softmax;
  out.a = a.index;
  out.requires_grad = na.requires_grad;
  out.owned = std::move(y);
  return push(std::move(out));
}

template <typename Real>
Var Tape<Real>::gather_row(Var table, std::size_t row) {
  const Node& nt = node(table, "gather_row");
  const Tensor<Real>& T = nt.value();
  if (row >= T.rows()) {
    fail(ErrorKind::invalid_argument, "gather_row: row " + std::to_string(row) + " out of range for " +
                                          T.shape_string());
  }
  std::vector<Real> r(T.data() + row * T.cols(), T.data() + (row + 1) * T.cols());
  Node out;
  out.op = Op::gather_row;
  out.a = table.index;
  out.aux = row;
  out.requires_grad = nt.requires_grad;
  out.owned = Tensor<Real>::column(std::move(r));
  return push(std::move(out));
}

template <typename Real>
Var Tape<Real>::pick(Var a, std::size_t index) {
  const Node& na = node(a, "pick");
  const Tensor<Real>& x = na.value();
  if (index >= x.size()) {
    fail(ErrorKind::invalid_argument, "pick: index " + std::to_string(index) + " out of range for " +
                                          x.shape_string());
  }
  Node out;
  out.op = Op::pick;
  out.a = a.index;
  out.aux = index;
  out.requires_grad = na.requires_grad;
  out.owned = Tensor<Real>(1, 1, x[index]);
  return push(std::move(out));
}

template <typename Real>
Var Tape<Real>::sum(Var a) {
  const Node& na = node(a, "sum");
  Real acc{0};
  for (Real v : na.value().values()) acc += v;
  Node out;
  out.op = Op::sum;
  out.a = a.index;
  out.requires_grad = na.requires_grad;
  out.owned = Tensor<Real>(1, 1, acc);
  return push(std::move(out));
}

template <typename Real>
Var Tape<Real>::mean(Var a) {
  const Node& na = node(a, "mean");
  const auto& x = na.value();
  if (x.empty()) fail(ErrorKind::invalid_argument, "mean: empty input");
  Real acc{0};
  for (Real v : x.values()) acc += v;
  Node out;
  out.op = Op::mean;
  out.a = a.index;
  out.requires_grad = na.requires_grad;
  out.owned = Tensor<Real>(1, 1, acc / static_cast<Real>(x.size()));
  return push(std::move(out));
}

template <typename Real>
Var Tape<Real>::scale(Var a, Real factor) {
  const Node& na = node(a, "scale");
  Tensor<Real> y = na.value();
  for (auto& v : y.values()) v *= factor;
  Node out;
  out.op = Op::scale;
  out.a = a.index;
  out.factor = factor;
  out.requires_grad = na.requires_grad;
  out.owned = std::move(y);
  return push(std::move(out));
}

template <typename Real>
Var Tape<Real>::slice_rows(Var a, std::size_t begin, std::size_t count) {
  const Node& na = node(a, "slice_rows");
  const Tensor<Real>& x = na.value();
  if (begin + count > x.rows()) {
    fail(ErrorKind::shape, "slice_rows: rows [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                               ") out of range for " + x.shape_string());
  }
  std::vector<Real> d(x.data() + begin * x.cols(), x.data() + (begin + count) * x.cols());
  Node out;
  out.op = Op::slice_rows;
  out.a = a.index;
  out.aux = begin;
  out.requires_grad = na.requires_grad;
  out.owned = Tensor<Real>(count, x.cols(), std::move(d));
  return push(std::move(out));
}

template <typename Real>
std::vector<Tensor<Real>> Tape<Real>::backward(Var loss) {
  const Node& nl = node(loss, "backward");
  if (nl.value().size() != 1) {
    fail(ErrorKind::shape, "backward: loss must be a scalar, got " + nl.value().shape_string());
  }
  std::vector<Tensor<Real>> grads(nodes_.size());
  grads[loss.index] = Tensor<Real>(1, 1, Real{1});
  last_visits_ = 0;

  for (std::size_t idx = loss.index + 1; idx-- > 0;) {
    ++last_visits_;
    const Node& n = nodes_[idx];
    Tensor<Real>& g = grads[idx];
    if (g.empty() || !n.requires_grad) continue;
    auto wants = [&](std::uint32_t i) { return nodes_[i].requires_grad; };

    switch (n.op) {
      case Op::parameter:
      case Op::constant:
        break;
      case Op::matmul: {
        const Tensor<Real>& A = nodes_[n.a].value();
        const Tensor<Real>& B = nodes_[n.b].value();
        const std::size_t m = A.rows(), k = A.cols(), cols = B.cols();
        if (wants(n.a)) {
          Tensor<Real>& gA = grads[n.a];
          accumulate(gA, A);
          // gA += g * B^T
          for (std::size_t i = 0; i < m; ++i) {
            Real* row = gA.data() + i * k;
            for (std::size_t j = 0; j < cols; ++j) {
              const Real gij = g(i, j);
              if (gij == Real{0}) continue;
              for (std::size_t p = 0; p < k; ++p) row[p] += gij * B(p, j);
            }
          }
        }
        if (wants(n.b)) {
          Tensor<Real>& gB = grads[n.b];
          accumulate(gB, B);
          // gB += A^T * g
          for (std::size_t i = 0; i < m; ++i) {
            const Real* arow = A.data() + i * k;
            for (std::size_t j = 0; j < cols; ++j) {
              const Real gij = g(i, j);
              if (gij == Real{0}) continue;
              for (std::size_t p = 0; p < k; ++p) gB(p, j) += arow[p] * gij;
            }
          }
        }
        break;
      }
      case Op::add: {
        for (std::uint32_t in : {n.a, n.b}) {
          if (!wants(in)) continue;
          Tensor<Real>& gi = grads[in];
          accumulate(gi, g);
          for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
        }
        break;
      }
      case Op::mul: {
        const Tensor<Real>& A = nodes_[n.a].value();
        const Tensor<Real>& B = nodes_[n.b].value();
        if (wants(n.a)) {
          Tensor<Real>& gA = grads[n.a];
          accumulate(gA, A);
          for (std::size_t i = 0; i < g.size(); ++i) gA[i] += g[i] * B[i];
        }
        if (wants(n.b)) {
          Tensor<Real>& gB = grads[n.b];
          accumulate(gB, B);
          for (std::size_t i = 0; i < g.size(); ++i) gB[i] += g[i] * A[i];
        }
        break;
      }
      case Op::sigmoid: {
        const Tensor<Real>& y = n.owned;
        Tensor<Real>& gA = grads[n.a];
        accumulate(gA, y);
        for (std::size_t i = 0; i < g.size(); ++i) gA[i] += g[i] * y[i] * (Real{1} - y[i]);
        break;
      }
      case Op::tanh: {
        const Tensor<Real>& y = n.owned;
        Tensor<Real>& gA = grads[n.a];
        accumulate(gA, y);
        for (std::size_t i = 0; i < g.size(); ++i) gA[i] += g[i] * (Real{1} - y[i] * y[i]);
        break;
      }
      case Op::log_softmax: {
        const Tensor<Real>& y = n.owned;
        Real gsum{0};
        for (Real v : g.values()) gsum += v;
        Tensor<Real>& gA = grads[n.a];
        accumulate(gA, y);
        for (std::size_t i = 0; i < g.size(); ++i) gA[i] += g[i] - std::exp(y[i]) * gsum;
        break;
      }
      case Op::gather_row: {
        const Tensor<Real>& T = nodes_[n.a].value();
        Tensor<Real>& gT = grads[n.a];
        accumulate(gT, T);
        Real* row = gT.data() + n.aux * T.cols();
        for (std::size_t i = 0; i < g.size(); ++i) row[i] += g[i];
        break;
      }
      case Op::pick: {
        const Tensor<Real>& x = nodes_[n.a].value();
        Tensor<Real>& gA = grads[n.a];
        accumulate(gA, x);
        gA[n.aux] += g[0];
        break;
      }
      case Op::sum:
      case Op::mean: {
        const Tensor<Real>& x = nodes_[n.a].value();
        Tensor<Real>& gA = grads[n.a];
        accumulate(gA, x);
        const Real d = n.op == Op::sum ? g[0] : g[0] / static_cast<Real>(x.size());
        for (auto& v : gA.values()) v += d;
        break;
      }
      case Op::scale: {
        Tensor<Real>& gA = grads[n.a];
        accumulate(gA, g);
        for (std::size_t i = 0; i < g.size(); ++i) gA[i] += n.factor * g[i];
        break;
      }
      case Op::slice_rows: {
        const Tensor<Real>& x = nodes_[n.a].value();
        Tensor<Real>& gA = grads[n.a];
        accumulate(gA, x);
        Real* dst = gA.data() + n.aux * x.cols();
        for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
        break;
      }
    }
    // Interior gradients are dead once propagated.
    if (n.op != Op::parameter) g = Tensor<Real>();
  }

  std::vector<Tensor<Real>> out;
  out.reserve(parameter_nodes_.size());
  for (std::uint32_t idx : parameter_nodes_) {
    if (grads[idx].empty()) {
      const auto& v = nodes_[idx].value();
      out.emplace_back(v.rows(), v.cols());
    } else {
      out.push_back(std::move(grads[idx]));
    }
  }
  return out;
}

template class Tape<float>;
template class Tape<double>;

}  // namespace adaptlm::numerics
