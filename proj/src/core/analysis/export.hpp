#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "analysis/regression.hpp"
#include "analysis/surprisal.hpp"

namespace adaptlm::analysis {

struct LmemRow {
  const SurprisalRecord* adaptive = nullptr;
  double non_adaptive_surprisal = 0.0;
  std::optional<double> reading_time;
};

struct LmemTable {
  std::vector<LmemRow> rows;
  std::size_t dropped_unk = 0;
};

// Rows aligned token-for-token; throws Error(data_invariant) at the first
// position where the two streams disagree. UNK tokens are dropped unless
// `include_unk`. The table points into `adaptive`.
LmemTable build_lmem_table(std::span<const SurprisalRecord> adaptive, std::span<const SurprisalRecord> non_adaptive,
                           std::span<const double> reading_times = {}, bool include_unk = false);

extern const char* const kLmemHeader;
std::string format_lmem_tsv(const LmemTable& table);

// Fixed-effects proxy: reading_time on all four predictors when reading times
// are present, otherwise adaptive surprisal on the other three.
RegressionResult lmem_fixed_effects_proxy(const LmemTable& table);

struct PlotPoint {
  double x = 0.0;
  double y = 0.0;
  std::string condition;
  std::string series;
};

extern const char* const kPlotHeader;
std::string format_plot_csv(std::span<const PlotPoint> points);

}  // namespace adaptlm::analysis
