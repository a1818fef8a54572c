#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace adaptlm::numerics {

// Dense row-major 2-D array. Vectors are represented as n x 1 columns.
template <typename Real>
class Tensor {
 public:
  using value_type = Real;

  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, Real fill = Real{0})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Tensor(std::size_t rows, std::size_t cols, std::vector<Real> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      fail(ErrorKind::shape, "tensor data length " + std::to_string(data_.size()) +
                                 " does not match shape " + shape_string());
    }
  }

  static Tensor column(std::vector<Real> values) {
    const auto n = values.size();
    return Tensor(n, 1, std::move(values));
  }

  static Tensor identity(std::size_t n) {
    Tensor t(n, n);
    for (std::size_t i = 0; i < n; ++i) t(i, i) = Real{1};
    return t;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  bool is_vector() const noexcept { return rows_ == 1 || cols_ == 1; }

  Real& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  Real operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  Real& operator[](std::size_t i) { return data_[i]; }
  Real operator[](std::size_t i) const { return data_[i]; }

  std::span<Real> values() noexcept { return data_; }
  std::span<const Real> values() const noexcept { return data_; }
  Real* data() noexcept { return data_.data(); }
  const Real* data() const noexcept { return data_.data(); }

  bool same_shape(const Tensor& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  bool all_finite() const noexcept {
    for (Real v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  void fill(Real v) { std::fill(data_.begin(), data_.end(), v); }

  std::string shape_string() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Real> data_;
};

template <typename Real>
double squared_norm(const Tensor<Real>& t) {
  double acc = 0.0;
  for (Real v : t.values()) acc += static_cast<double>(v) * static_cast<double>(v);
  return acc;
}

}  // namespace adaptlm::numerics
