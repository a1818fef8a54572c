#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "adaptation/adaptation.hpp"
#include "analysis/regression.hpp"
#include "analysis/surprisal.hpp"
#include "corpus/stimuli.hpp"
#include "corpus/vocabulary.hpp"

namespace adaptlm::adaptation {

struct TextInput {
  std::string id;
  std::string genre;
  std::vector<Sentence> sentences;
};

// Sentences tagged with a provenance key ("text_id:index") so that splits can
// be checked for overlap.
struct SentenceSet {
  std::string name;
  std::vector<std::string> keys;
  std::vector<Sentence> sentences;
};

struct PhaseResult {
  std::string label;
  double perplexity = 0.0;
  std::size_t tokens = 0;
  bool diverged = false;
};

struct ProtocolReport {
  std::string protocol;
  std::vector<std::pair<std::string, std::string>> config;  // echo, in insertion order
  std::uint64_t seed = 0;
  std::vector<PhaseResult> phases;
  // Per-token records keyed by pass name ("adaptive", "non_adaptive",
  // "per_text", "never"); each pass covers every scored token once.
  std::map<std::string, std::vector<analysis::SurprisalRecord>> streams;
  bool diverged = false;

  const PhaseResult& phase(const std::string& label) const;
};

std::vector<std::pair<std::string, std::string>> describe(const AdaptationConfig& config);

// Score sentence k with the weights adapted on sentences 1..k-1, then adapt
// on it. Also runs a non-adaptive pass over the same text.
template <typename Real>
ProtocolReport incremental_eval(const Snapshot<Real>& base, const TextInput& text, const AdaptationConfig& config,
                                const corpus::Vocabulary& vocab);

// Per-corpus version of incremental_eval: every text starts from `base`.
template <typename Real>
ProtocolReport incremental_eval_texts(const Snapshot<Real>& base, const std::vector<TextInput>& texts,
                                      const AdaptationConfig& config, const corpus::Vocabulary& vocab,
                                      std::size_t threads = 1);

// For each genre runs both revert policies over its texts. Phases, per genre g:
//   g/per_text, g/never                    every sentence
//   g/per_text/later, g/never/later        first sentence of each text excluded
// plus the same four over all genres pooled under "all".
template <typename Real>
ProtocolReport genre_protocol(const Snapshot<Real>& base, const std::vector<TextInput>& texts,
                              const AdaptationConfig& config, const corpus::Vocabulary& vocab,
                              std::size_t threads = 1);

struct ForgettingResult {
  std::string g1, g2;
  double a = 0.0;  // base model on held-out G1
  double b = 0.0;  // after adapting to G1
  double c = 0.0;  // after adapting to G1 then G2
  bool diverged = false;
};

// Throws Error(data_invariant) when g1_adapt and g1_heldout share a key.
template <typename Real>
ForgettingResult run_forgetting_protocol(const Snapshot<Real>& base, const SentenceSet& g1_adapt,
                                         const SentenceSet& g2_adapt, const SentenceSet& g1_heldout,
                                         const AdaptationConfig& config);

struct GenreSplit {
  std::string genre;
  SentenceSet adapt;
  SentenceSet heldout;
};

struct ForgettingSummary {
  std::vector<ForgettingResult> pairs;     // ordered pairs with G1 != G2
  std::vector<ForgettingResult> controls;  // G1 == G2, only when requested
  double mean_a = 0.0, mean_b = 0.0, mean_c = 0.0;
};

template <typename Real>
ForgettingSummary forgetting_over_genres(const Snapshot<Real>& base, const std::vector<GenreSplit>& splits,
                                         const AdaptationConfig& config, bool include_controls = false,
                                         std::size_t threads = 1);

inline const std::vector<double> kDefaultLearningRateGrid{0.0, 0.002, 0.02, 0.2, 2.0, 20.0, 200.0};

struct SweepCell {
  double learning_rate = 0.0;
  std::string test_set;
  double perplexity = 0.0;
  bool diverged = false;
};

// For every grid point: fresh copy of `base`, adapt over the stream, freeze,
// then score each test set sentence by sentence from a zero state.
template <typename Real>
std::vector<SweepCell> learning_rate_sweep(const Snapshot<Real>& base, const std::vector<Sentence>& adaptation_stream,
                                           const std::vector<SentenceSet>& test_sets, const std::vector<double>& grid,
                                           const AdaptationConfig& config, std::size_t threads = 1);

// Grid point with the lowest adaptive perplexity on `dev`; ties go to the
// smaller rate.
template <typename Real>
double tune_learning_rate(const Snapshot<Real>& base, const TextInput& dev, const std::vector<double>& grid,
                          const AdaptationConfig& config);

struct CriticalTrial {
  int list_id = 0;
  std::size_t trial_index = 0;  // among all trials, 0-based
  std::size_t item_order = 0;   // among critical trials, 1-based
  int pair_id = 0;
  corpus::Condition presented = corpus::Condition::ambiguous;
  double ambiguous_region = 0.0;    // both versions scored with the same weights and state
  double unambiguous_region = 0.0;
  double penalty = 0.0;
  double presented_region = 0.0;
};

struct GardenPathRun {
  std::vector<CriticalTrial> trials;
  std::vector<analysis::SurprisalRecord> records;  // presented trials, every list
  bool diverged = false;
};

// Each list is run from `base`: fillers are adapted on, critical trials are
// scored in both conditions and then adapted on in the presented one.
template <typename Real>
GardenPathRun run_garden_path_lists(const Snapshot<Real>& base, const std::vector<corpus::StimulusList>& lists,
                                    const AdaptationConfig& config, const corpus::Vocabulary& vocab,
                                    std::size_t threads = 1);

struct GardenPathTrends {
  analysis::RegressionResult ambiguous;    // penalty ~ item_order
  analysis::RegressionResult unambiguous;  // region mean of presented unambiguous trials ~ item_order
};

GardenPathTrends garden_path_trends(const std::vector<CriticalTrial>& trials);

}  // namespace adaptlm::adaptation
