#pragma once

#include <span>

#include "analysis/surprisal.hpp"
#include "corpus/stimuli.hpp"

namespace adaptlm::analysis {

// `records` are the records of the item's own sentence, in order. Throws
// Error(data_invariant) if the region is not fully scored or the scored
// tokens differ from the item's.
double region_mean_surprisal(std::span<const SurprisalRecord> records, const corpus::StimulusItem& item);

// ambiguous-region mean minus unambiguous-region mean over the same words.
double disambiguation_penalty(std::span<const SurprisalRecord> ambiguous_records,
                              const corpus::StimulusItem& ambiguous,
                              std::span<const SurprisalRecord> unambiguous_records,
                              const corpus::StimulusItem& unambiguous);

}  // namespace adaptlm::analysis
