#pragma once

#include <span>
#include <string>
#include <vector>

namespace adaptlm::analysis {

// Column-major design matrix.
struct Design {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
  void add(std::string name, std::vector<double> column);
  static Design intercept_and(std::string name, std::span<const double> x);
};

struct RegressionResult {
  std::vector<std::string> names;
  std::vector<double> coefficients;
  std::vector<double> standard_errors;
  std::vector<double> t_values;  // NaN where the standard error is 0
  std::vector<double> residuals;
  std::size_t n = 0;
  double residual_variance = 0.0;
  double r_squared = 0.0;  // against the mean of y

  double coefficient(const std::string& name) const;
  double t_value(const std::string& name) const;
};

// Least squares through Householder QR. Requires n > columns; a column that
// is (numerically) a combination of the earlier ones is rejected by name.
RegressionResult ols_fit(const Design& x, std::span<const double> y);

// Residuals of y ~ 1 + order. Needs at least 3 points.
std::vector<double> residualize_by_order(std::span<const double> values, std::span<const double> order);

struct TrialValue {
  int list_id = 0;
  double item_order = 0.0;  // 1-based position among the critical trials
  double value = 0.0;
  std::string condition;
};

// value ~ 1 + item_order pooled over lists; needs trials from >= 2 lists.
RegressionResult penalty_trend(std::span<const TrialValue> trials);

}  // namespace adaptlm::analysis
