#include "analysis/export.hpp"

#include <cmath>
#include <sstream>

#include "error.hpp"

namespace adaptlm::analysis {

const char* const kLmemHeader =
    "text_id\tsentence_index\ttoken_index\ttoken\tword_length\tsentence_position\tnon_adaptive_surprisal\t"
    "adaptive_surprisal\tis_eos\tcondition\tpair_id\tin_region\treading_time";
const char* const kPlotHeader = "x,y,condition,series";

LmemTable build_lmem_table(std::span<const SurprisalRecord> adaptive, std::span<const SurprisalRecord> non_adaptive,
                           std::span<const double> reading_times, bool include_unk) {
  if (!reading_times.empty() && reading_times.size() != adaptive.size()) {
    fail(ErrorKind::data_invariant, "reading times cover " + std::to_string(reading_times.size()) + " tokens, records " +
                                        std::to_string(adaptive.size()));
  }
  const std::size_t n = std::min(adaptive.size(), non_adaptive.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = adaptive[i];
    const auto& b = non_adaptive[i];
    if (a.text_id != b.text_id || a.sentence_index != b.sentence_index || a.token_index != b.token_index ||
        a.token != b.token) {
      fail(ErrorKind::data_invariant, "record streams diverge at row " + std::to_string(i) + ": '" + a.text_id + ":" +
                                          std::to_string(a.token_index) + ":" + a.token + "' vs '" + b.text_id + ":" +
                                          std::to_string(b.token_index) + ":" + b.token + "'");
    }
  }
  if (adaptive.size() != non_adaptive.size()) {
    fail(ErrorKind::data_invariant, "record streams diverge at row " + std::to_string(n) + ": lengths " +
                                        std::to_string(adaptive.size()) + " vs " + std::to_string(non_adaptive.size()));
  }
  LmemTable table;
  for (std::size_t i = 0; i < n; ++i) {
    if (adaptive[i].is_unk && !include_unk) {
      ++table.dropped_unk;
      continue;
    }
    LmemRow row{&adaptive[i], non_adaptive[i].surprisal, std::nullopt};
    if (!reading_times.empty()) row.reading_time = reading_times[i];
    table.rows.push_back(row);
  }
  return table;
}

std::string format_lmem_tsv(const LmemTable& table) {
  std::ostringstream out;
  out << kLmemHeader << '\n';
  for (const auto& row : table.rows) {
    const auto& r = *row.adaptive;
    out << r.text_id << '\t' << r.sentence_index << '\t' << r.token_index << '\t' << r.token << '\t' << r.word_length
        << '\t' << r.sentence_position << '\t' << format_number(row.non_adaptive_surprisal) << '\t'
        << format_number(r.surprisal) << '\t' << int(r.is_eos) << '\t' << (r.condition.empty() ? "-" : r.condition)
        << '\t' << r.pair_id << '\t' << int(r.in_region) << '\t'
        << (row.reading_time ? format_number(*row.reading_time) : "NA") << '\n';
  }
  return out.str();
}

RegressionResult lmem_fixed_effects_proxy(const LmemTable& table) {
  const bool with_rt = !table.rows.empty() && table.rows.front().reading_time.has_value();
  std::vector<double> one, len, pos, non, ada, y;
  for (const auto& row : table.rows) {
    one.push_back(1.0);
    len.push_back(static_cast<double>(row.adaptive->word_length));
    pos.push_back(static_cast<double>(row.adaptive->sentence_position));
    non.push_back(row.non_adaptive_surprisal);
    ada.push_back(row.adaptive->surprisal);
    y.push_back(with_rt ? *row.reading_time : row.adaptive->surprisal);
  }
  Design d;
  d.add("intercept", one);
  d.add("word_length", len);
  d.add("sentence_position", pos);
  d.add("non_adaptive_surprisal", non);
  if (with_rt) d.add("adaptive_surprisal", ada);
  return ols_fit(d, y);
}

std::string format_plot_csv(std::span<const PlotPoint> points) {
  std::ostringstream out;
  out << kPlotHeader << '\n';
  for (const auto& p : points) {
    out << format_number(p.x) << ',' << format_number(p.y) << ',' << p.condition << ',' << p.series << '\n';
  }
  return out.str();
}

}  // namespace adaptlm::analysis
