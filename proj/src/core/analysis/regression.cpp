#include "analysis/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "error.hpp"

namespace adaptlm::analysis {

void Design::add(std::string name, std::vector<double> column) {
  if (!columns.empty() && column.size() != rows()) {
    fail(ErrorKind::shape, "design column '" + name + "' has " + std::to_string(column.size()) + " rows, expected " +
                               std::to_string(rows()));
  }
  names.push_back(std::move(name));
  columns.push_back(std::move(column));
}

Design Design::intercept_and(std::string name, std::span<const double> x) {
  Design d;
  d.add("intercept", std::vector<double>(x.size(), 1.0));
  d.add(std::move(name), std::vector<double>(x.begin(), x.end()));
  return d;
}

namespace {

std::size_t index_of(const std::vector<std::string>& names, const std::string& name) {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) fail(ErrorKind::invalid_argument, "no regression coefficient named '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

}  // namespace

double RegressionResult::coefficient(const std::string& name) const { return coefficients[index_of(names, name)]; }
double RegressionResult::t_value(const std::string& name) const { return t_values[index_of(names, name)]; }

RegressionResult ols_fit(const Design& x, std::span<const double> y) {
  const std::size_t p = x.columns.size();
  const std::size_t n = x.rows();
  if (p == 0) fail(ErrorKind::invalid_argument, "ols_fit: empty design");
  if (y.size() != n) {
    fail(ErrorKind::shape, "ols_fit: response has " + std::to_string(y.size()) + " rows, design has " +
                               std::to_string(n));
  }
  if (n <= p) {
    fail(ErrorKind::invalid_argument, "ols_fit: need more observations (" + std::to_string(n) + ") than columns (" +
                                          std::to_string(p) + ")");
  }
  for (std::size_t j = 0; j < p; ++j) {
    for (double v : x.columns[j]) {
      if (!std::isfinite(v)) fail(ErrorKind::data_invariant, "ols_fit: non-finite value in column '" + x.names[j] + "'");
    }
  }
  for (double v : y) {
    if (!std::isfinite(v)) fail(ErrorKind::data_invariant, "ols_fit: non-finite response");
  }

  // a holds R above the diagonal after the loop; qty accumulates Q^T y.
  std::vector<std::vector<double>> a = x.columns;
  std::vector<double> qty(y.begin(), y.end());
  std::vector<double> diag(p);
  for (std::size_t j = 0; j < p; ++j) {
    double col_norm = 0.0;
    for (double v : x.columns[j]) col_norm += v * v;
    col_norm = std::sqrt(col_norm);
    double tail = 0.0;
    for (std::size_t i = j; i < n; ++i) tail += a[j][i] * a[j][i];
    tail = std::sqrt(tail);
    if (col_norm == 0.0 || tail <= 1e-10 * col_norm) {
      fail(ErrorKind::data_invariant, "ols_fit: design is rank deficient; column '" + x.names[j] +
                                          "' is a linear combination of earlier columns");
    }
    const double alpha = a[j][j] > 0 ? -tail : tail;
    // v = a_j[j:] - alpha e_1, reflection H = I - 2 v v^T / (v^T v).
    std::vector<double> v(a[j].begin() + static_cast<std::ptrdiff_t>(j), a[j].end());
    v[0] -= alpha;
    double vtv = 0.0;
    for (double e : v) vtv += e * e;
    auto reflect = [&](std::vector<double>& col) {
      double dot = 0.0;
      for (std::size_t i = j; i < n; ++i) dot += v[i - j] * col[i];
      const double s = 2.0 * dot / vtv;
      for (std::size_t i = j; i < n; ++i) col[i] -= s * v[i - j];
    };
    for (std::size_t k = j; k < p; ++k) reflect(a[k]);
    reflect(qty);
    diag[j] = a[j][j];
  }

  // Back substitution R beta = (Q^T y)[0:p].
  std::vector<double> beta(p);
  for (std::size_t jj = p; jj-- > 0;) {
    double s = qty[jj];
    for (std::size_t k = jj + 1; k < p; ++k) s -= a[k][jj] * beta[k];
    beta[jj] = s / diag[jj];
  }

  RegressionResult out;
  out.names = x.names;
  out.coefficients = beta;
  out.n = n;
  out.residuals.resize(n);
  double rss = 0.0, mean_y = 0.0, tss = 0.0;
  for (double v : y) mean_y += v;
  mean_y /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    double fit = 0.0;
    for (std::size_t j = 0; j < p; ++j) fit += x.columns[j][i] * beta[j];
    out.residuals[i] = y[i] - fit;
    rss += out.residuals[i] * out.residuals[i];
    tss += (y[i] - mean_y) * (y[i] - mean_y);
  }
  out.residual_variance = rss / static_cast<double>(n - p);
  out.r_squared = tss > 0.0 ? 1.0 - rss / tss : (rss == 0.0 ? 1.0 : 0.0);

  // diag((R^T R)^{-1}) = squared row norms of R^{-1}.
  std::vector<std::vector<double>> rinv(p, std::vector<double>(p, 0.0));  // rinv[col][row]
  for (std::size_t c = 0; c < p; ++c) {
    for (std::size_t r = c + 1; r-- > 0;) {
      double s = r == c ? 1.0 : 0.0;
      for (std::size_t k = r + 1; k <= c; ++k) s -= a[k][r] * rinv[c][k];
      rinv[c][r] = s / diag[r];
    }
  }
  out.standard_errors.resize(p);
  out.t_values.resize(p);
  for (std::size_t r = 0; r < p; ++r) {
    double s = 0.0;
    for (std::size_t c = r; c < p; ++c) s += rinv[c][r] * rinv[c][r];
    out.standard_errors[r] = std::sqrt(out.residual_variance * s);
    out.t_values[r] = out.standard_errors[r] > 0.0 ? beta[r] / out.standard_errors[r]
                                                   : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

std::vector<double> residualize_by_order(std::span<const double> values, std::span<const double> order) {
  if (values.size() != order.size()) fail(ErrorKind::shape, "residualize_by_order: series lengths differ");
  if (values.size() < 3) fail(ErrorKind::invalid_argument, "residualize_by_order: need at least 3 trials");
  return ols_fit(Design::intercept_and("item_order", order), values).residuals;
}

RegressionResult penalty_trend(std::span<const TrialValue> trials) {
  std::set<int> lists;
  std::vector<double> order, y;
  for (const auto& t : trials) {
    lists.insert(t.list_id);
    order.push_back(t.item_order);
    y.push_back(t.value);
  }
  if (lists.size() < 2) fail(ErrorKind::invalid_argument, "penalty_trend: need trials from at least 2 lists");
  return ols_fit(Design::intercept_and("item_order", order), y);
}

}  // namespace adaptlm::analysis
