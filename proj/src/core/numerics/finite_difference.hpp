#pragma once

#include <cmath>
#include <vector>

#include "numerics/tensor.hpp"

namespace adaptlm::numerics {

// Central-difference gradient of a scalar function of a parameter list.
// `params` is perturbed in place one coordinate at a time and restored.
template <typename Real, typename F>
std::vector<Tensor<Real>> finite_difference_grad(F&& f, std::vector<Tensor<Real>>& params, Real epsilon) {
  if (!(epsilon > Real{0})) fail(ErrorKind::invalid_argument, "finite_difference_grad: epsilon must be positive");
  std::vector<Tensor<Real>> grads;
  grads.reserve(params.size());
  for (std::size_t t = 0; t < params.size(); ++t) {
    Tensor<Real> g(params[t].rows(), params[t].cols());
    for (std::size_t i = 0; i < params[t].size(); ++i) {
      const Real saved = params[t][i];
      params[t][i] = saved + epsilon;
      const Real up = f(static_cast<const std::vector<Tensor<Real>>&>(params));
      params[t][i] = saved - epsilon;
      const Real down = f(static_cast<const std::vector<Tensor<Real>>&>(params));
      params[t][i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        fail(ErrorKind::invalid_argument, "finite_difference_grad: objective returned a non-finite value");
      }
      g[i] = (up - down) / (Real{2} * epsilon);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

}  // namespace adaptlm::numerics
