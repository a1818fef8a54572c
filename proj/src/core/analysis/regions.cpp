#include "analysis/regions.hpp"

#include "error.hpp"

namespace adaptlm::analysis {

double region_mean_surprisal(std::span<const SurprisalRecord> records, const corpus::StimulusItem& item) {
  if (item.region_len == 0) fail(ErrorKind::invalid_argument, "item has an empty critical region");
  const auto region = item.region();
  if (records.size() < item.region_start + item.region_len) {
    fail(ErrorKind::data_invariant, "critical region of pair " + std::to_string(item.pair_id) + " is not fully scored");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < region.size(); ++k) {
    const auto& r = records[item.region_start + k];
    if (r.token != region[k] || r.sentence_position != item.region_start + k + 1) {
      fail(ErrorKind::data_invariant, "scored token '" + r.token + "' does not match region word '" + region[k] +
                                          "' of pair " + std::to_string(item.pair_id));
    }
    total += r.surprisal;
  }
  return total / static_cast<double>(region.size());
}

double disambiguation_penalty(std::span<const SurprisalRecord> ambiguous_records,
                              const corpus::StimulusItem& ambiguous,
                              std::span<const SurprisalRecord> unambiguous_records,
                              const corpus::StimulusItem& unambiguous) {
  if (ambiguous.region() != unambiguous.region()) {
    fail(ErrorKind::data_invariant, "paired critical regions differ: '" + corpus::join(ambiguous.region()) +
                                        "' vs '" + corpus::join(unambiguous.region()) + "'");
  }
  return region_mean_surprisal(ambiguous_records, ambiguous) - region_mean_surprisal(unambiguous_records, unambiguous);
}

}  // namespace adaptlm::analysis
