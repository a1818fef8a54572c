#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adaptation/protocols.hpp"
#include "analysis/export.hpp"
#include "corpus/corpus_io.hpp"
#include "corpus/stimuli.hpp"
#include "corpus/vocabulary.hpp"

namespace adaptlm::app {

// `n` sentences drawn without replacement from `pool`, or from the synthetic
// background mix when `pool` is empty.
std::vector<corpus::Words> sample_fillers(const std::vector<corpus::Words>& pool, std::size_t n, std::uint64_t seed);

struct GardenPathMaterials {
  std::vector<corpus::StimulusItem> items;
  std::vector<corpus::StimulusItem> fillers;
  std::vector<corpus::StimulusList> lists;
};

GardenPathMaterials garden_path_materials(std::size_t n_pairs, std::size_t n_fillers, std::uint64_t seed,
                                          const std::vector<corpus::Words>& filler_pool = {});

struct DativeSettings {
  corpus::Condition direction = corpus::Condition::double_object;
  std::size_t repetitions = 10;
  std::size_t n_pairs = 200;
  std::size_t n_adapt = 100;
  std::size_t n_new = 100;
  std::size_t n_fillers = 1000;
  std::vector<double> grid = adaptation::kDefaultLearningRateGrid;
};

// `seed` is the per-repetition seed; the sweep uses derive_seed(seed, 1000 + rep).
std::vector<corpus::StimulusItem> dative_pairs(const DativeSettings& s, std::uint64_t seed);
corpus::DativeMaterials dative_materials(const DativeSettings& s, std::uint64_t seed,
                                         const std::vector<corpus::Words>& filler_pool = {});
std::uint64_t dative_repetition_seed(std::uint64_t seed, std::size_t repetition);

struct SweepSummaryCell {
  double learning_rate = 0.0;
  std::string test_set;
  double mean = 0.0;
  double sd = 0.0;
  std::size_t diverged_runs = 0;
  double reduction = 0.0;  // 1 - mean / mean at lr 0
};

struct DativeSweepResult {
  std::vector<std::pair<std::size_t, adaptation::SweepCell>> cells;  // (repetition, cell)
  std::vector<SweepSummaryCell> summary;
  // Positive grid point below the top with the lowest perplexity relative to
  // lr 0, averaged over the test sets.
  double best_learning_rate = 0.0;
};

inline const char* const kSharedLexicon = "shared_lexicon";
inline const char* const kSharedSyntax = "shared_syntax";

template <typename Real>
DativeSweepResult run_dative_sweep(const adaptation::Snapshot<Real>& base, const corpus::Vocabulary& vocab,
                                   const DativeSettings& settings, const adaptation::AdaptationConfig& config,
                                   std::uint64_t seed, const std::vector<corpus::Words>& filler_pool = {},
                                   std::size_t threads = 1);

const SweepSummaryCell& summary_cell(const DativeSweepResult& r, double lr, const std::string& test_set);

// Per genre: sentences shuffled by seed, the first n_adapt for adaptation and
// the next n_heldout held out. Keys are "text_id:index".
std::vector<adaptation::GenreSplit> forgetting_splits(const corpus::Corpus& corpus, const corpus::Vocabulary& vocab,
                                                      std::size_t n_adapt, std::size_t n_heldout, std::uint64_t seed,
                                                      const std::vector<std::string>& genres = {});

std::vector<adaptation::TextInput> encode_texts(const corpus::Corpus& corpus, const corpus::Vocabulary& vocab);

struct GardenPathSummary {
  adaptation::GardenPathRun run;
  adaptation::GardenPathTrends trends;
  std::vector<analysis::PlotPoint> plot;
};

// Residualised learning curves: presented region means regressed on the
// number of trials seen (pooled over conditions), residuals averaged per
// condition and item order. Raw penalties per item order are included as
// series "penalty".
std::vector<analysis::PlotPoint> garden_path_plot(const std::vector<adaptation::CriticalTrial>& trials);

template <typename Real>
GardenPathSummary run_garden_path(const adaptation::Snapshot<Real>& base, const corpus::Vocabulary& vocab,
                                  const std::vector<corpus::StimulusList>& lists,
                                  const adaptation::AdaptationConfig& config, std::size_t threads = 1);

}  // namespace adaptlm::app
