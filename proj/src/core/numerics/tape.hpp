#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "numerics/tensor.hpp"

namespace adaptlm::numerics {

// Handle to a value recorded on a Tape. Carries the owning tape's id so that
// handles from a different tape are rejected instead of silently aliasing.
struct Var {
  static constexpr std::uint32_t kInvalid = ~std::uint32_t{0};
  std::uint32_t index = kInvalid;
  std::uint64_t tape_id = 0;
  bool valid() const noexcept { return index != kInvalid; }
};

enum class ElementwiseOp { sigmoid, tanh, add, mul };

enum class Op : std::uint8_t {
  parameter,
  constant,
  matmul,
  add,
  mul,
  sigmoid,
  tanh,
  log_softmax,
  gather_row,
  pick,
  sum,
  mean,
  scale,
  slice_rows,
};

// Reverse-mode recorder for the fixed operation set the language model uses.
// Parameters are registered by reference: the tape never copies weight
// matrices, so registered tensors must outlive it and stay unmodified until
// backward() returns. Gradients come back in registration order.
template <typename Real>
class Tape {
 public:
  Tape();
  Tape(Tape&&) noexcept = default;
  Tape& operator=(Tape&&) noexcept = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Parameters are held by reference and must outlive the tape.
  Var parameter(const Tensor<Real>& value);
  Var parameter(Tensor<Real>&&) = delete;
  Var constant(Tensor<Real> value);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var elementwise(ElementwiseOp kind, std::span<const Var> args);
  // Normalizes over all entries of a vector-shaped tensor.
  Var log_softmax(Var a);
  // Row `row` of a matrix, returned as a column vector.
  Var gather_row(Var table, std::size_t row);
  // Single entry (flat index) as a 1x1 scalar.
  Var pick(Var a, std::size_t index);
  Var sum(Var a);
  Var mean(Var a);
  Var scale(Var a, Real factor);
  Var slice_rows(Var a, std::size_t begin, std::size_t count);

  const Tensor<Real>& value(Var v) const;
  bool owns(Var v) const noexcept;
  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t parameter_count() const noexcept { return parameter_nodes_.size(); }

  // d loss / d parameter for every registered parameter (zeros when unused).
  std::vector<Tensor<Real>> backward(Var loss);
  // Number of recorded operations replayed by the most recent backward().
  std::size_t last_backward_visits() const noexcept { return last_visits_; }

 private:
  struct Node {
    Op op = Op::constant;
    std::uint32_t a = Var::kInvalid;
    std::uint32_t b = Var::kInvalid;
    std::size_t aux = 0;
    Real factor = Real{1};
    bool requires_grad = false;
    const Tensor<Real>* external = nullptr;
    Tensor<Real> owned;

    const Tensor<Real>& value() const { return external ? *external : owned; }
  };

  const Node& node(Var v, const char* op_name) const;
  Var push(Node n);

  std::uint64_t id_;
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> parameter_nodes_;
  std::size_t last_visits_ = 0;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace adaptlm::numerics
