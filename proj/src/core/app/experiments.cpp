#include "app/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "corpus/synthetic.hpp"
#include "error.hpp"

namespace adaptlm::app {

using corpus::Words;

namespace {

// Streams of derive_seed() per material, so that changing one count does not
// reshuffle the others.
enum Stream : std::uint64_t { kItems = 1, kFillers, kLists, kDativePairs, kDativeFillers, kDativeShuffle, kSplits };

}  // namespace

std::vector<Words> sample_fillers(const std::vector<Words>& pool, std::size_t n, std::uint64_t seed) {
  if (pool.empty()) {
    return corpus::SyntheticLanguage().sample_many(corpus::TemplateMix::background(), n, seed);
  }
  if (pool.size() < n) {
    fail(ErrorKind::data_invariant, "filler corpus has " + std::to_string(pool.size()) + " sentences, " +
                                        std::to_string(n) + " needed");
  }
  std::vector<std::size_t> idx(pool.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) std::swap(idx[i], idx[i + corpus::uniform_index(idx.size() - i, rng)]);
  std::vector<Words> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(pool[idx[i]]);
  return out;
}

GardenPathMaterials garden_path_materials(std::size_t n_pairs, std::size_t n_fillers, std::uint64_t seed,
                                          const std::vector<Words>& filler_pool) {
  GardenPathMaterials m;
  m.items = corpus::generate_garden_path_items(corpus::default_lexicon().garden_path, n_pairs,
                                               corpus::derive_seed(seed, kItems));
  m.fillers = corpus::make_fillers(sample_fillers(filler_pool, n_fillers, corpus::derive_seed(seed, kFillers)));
  m.lists = corpus::compile_stimulus_lists(m.items, m.fillers, corpus::derive_seed(seed, kLists));
  return m;
}

std::vector<corpus::StimulusItem> dative_pairs(const DativeSettings& s, std::uint64_t seed) {
  return corpus::generate_dative_items(corpus::default_lexicon().dative, s.n_pairs,
                                       corpus::derive_seed(seed, kDativePairs));
}

std::uint64_t dative_repetition_seed(std::uint64_t seed, std::size_t repetition) {
  return corpus::derive_seed(seed, 1000 + repetition);
}

corpus::DativeMaterials dative_materials(const DativeSettings& s, std::uint64_t seed,
                                         const std::vector<Words>& filler_pool) {
  const auto pairs = dative_pairs(s, seed);
  const auto fillers = sample_fillers(filler_pool, s.n_fillers, corpus::derive_seed(seed, kDativeFillers));
  return corpus::assemble_dative_adaptation_set(pairs, fillers, s.direction, corpus::derive_seed(seed, kDativeShuffle),
                                                s.n_adapt, s.n_new);
}

template <typename Real>
DativeSweepResult run_dative_sweep(const adaptation::Snapshot<Real>& base, const corpus::Vocabulary& vocab,
                                   const DativeSettings& settings, const adaptation::AdaptationConfig& config,
                                   std::uint64_t seed, const std::vector<Words>& filler_pool, std::size_t threads) {
  if (settings.repetitions == 0) fail(ErrorKind::usage, "dative sweep needs at least one repetition");
  if (std::find(settings.grid.begin(), settings.grid.end(), 0.0) == settings.grid.end()) {
    fail(ErrorKind::usage, "dative sweep grid must include the lr 0 baseline");
  }
  DativeSweepResult result;
  for (std::size_t rep = 0; rep < settings.repetitions; ++rep) {
    const auto m = dative_materials(settings, dative_repetition_seed(seed, rep), filler_pool);
    std::vector<corpus::StimulusItem> critical;
    for (const auto* set : {&m.shared_lexicon_test, &m.shared_syntax_test}) {
      for (const auto& s : *set) critical.push_back({0, corpus::Condition::filler, s, 0, 0});
    }
    corpus::check_in_vocabulary(critical, vocab);
    std::vector<adaptation::SentenceSet> tests{{kSharedLexicon, {}, vocab.encode_all(m.shared_lexicon_test)},
                                               {kSharedSyntax, {}, vocab.encode_all(m.shared_syntax_test)}};
    const auto cells = adaptation::learning_rate_sweep(base, vocab.encode_all(m.adaptation_stream), tests,
                                                       settings.grid, config, threads);
    for (const auto& c : cells) result.cells.emplace_back(rep, c);
  }

  std::map<std::pair<double, std::string>, std::vector<const adaptation::SweepCell*>> groups;
  for (const auto& [rep, c] : result.cells) groups[{c.learning_rate, c.test_set}].push_back(&c);
  std::map<std::string, double> baseline;
  for (const auto& [key, cells] : groups) {
    SweepSummaryCell s;
    s.learning_rate = key.first;
    s.test_set = key.second;
    for (const auto* c : cells) {
      s.mean += c->perplexity;
      s.diverged_runs += c->diverged;
    }
    const auto n = static_cast<double>(cells.size());
    s.mean /= n;
    double var = 0.0;
    for (const auto* c : cells) var += (c->perplexity - s.mean) * (c->perplexity - s.mean);
    s.sd = cells.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
    if (!std::isfinite(s.sd)) s.sd = std::numeric_limits<double>::infinity();
    if (s.learning_rate == 0.0) baseline[s.test_set] = s.mean;
    result.summary.push_back(s);
  }
  for (auto& s : result.summary) s.reduction = 1.0 - s.mean / baseline.at(s.test_set);

  const double top = *std::max_element(settings.grid.begin(), settings.grid.end());
  double best = std::numeric_limits<double>::infinity();
  for (double lr : settings.grid) {
    if (lr <= 0.0 || lr >= top) continue;
    double score = 0.0;
    std::size_t k = 0;
    for (const auto& s : result.summary) {
      if (s.learning_rate == lr) {
        score += s.mean / baseline.at(s.test_set);
        ++k;
      }
    }
    score /= static_cast<double>(k);
    if (score < best) {
      best = score;
      result.best_learning_rate = lr;
    }
  }
  return result;
}

const SweepSummaryCell& summary_cell(const DativeSweepResult& r, double lr, const std::string& test_set) {
  for (const auto& s : r.summary) {
    if (s.learning_rate == lr && s.test_set == test_set) return s;
  }
  fail(ErrorKind::invalid_argument, "no sweep cell for lr " + std::to_string(lr) + " and '" + test_set + "'");
}

std::vector<adaptation::GenreSplit> forgetting_splits(const corpus::Corpus& corpus, const corpus::Vocabulary& vocab,
                                                      std::size_t n_adapt, std::size_t n_heldout, std::uint64_t seed,
                                                      const std::vector<std::string>& genres) {
  const auto chosen = genres.empty() ? corpus.genres() : genres;
  std::vector<adaptation::GenreSplit> out;
  for (std::size_t g = 0; g < chosen.size(); ++g) {
    std::vector<std::pair<std::string, const Words*>> all;
    for (const auto* t : corpus.texts_in(chosen[g])) {
      for (std::size_t i = 0; i < t->sentences.size(); ++i) all.emplace_back(t->id + ":" + std::to_string(i), &t->sentences[i]);
    }
    if (all.size() < n_adapt + n_heldout) {
      fail(ErrorKind::data_invariant, "genre '" + chosen[g] + "' has " + std::to_string(all.size()) +
                                          " sentences, " + std::to_string(n_adapt + n_heldout) + " needed");
    }
    std::mt19937_64 rng(corpus::derive_seed(seed, kSplits + g));
    for (std::size_t i = all.size(); i > 1; --i) std::swap(all[i - 1], all[corpus::uniform_index(i, rng)]);
    adaptation::GenreSplit split;
    split.genre = chosen[g];
    split.adapt.name = chosen[g] + "/adapt";
    split.heldout.name = chosen[g] + "/heldout";
    for (std::size_t i = 0; i < n_adapt + n_heldout; ++i) {
      auto& dst = i < n_adapt ? split.adapt : split.heldout;
      dst.keys.push_back(all[i].first);
      dst.sentences.push_back(vocab.encode(*all[i].second));
    }
    out.push_back(std::move(split));
  }
  return out;
}

std::vector<adaptation::TextInput> encode_texts(const corpus::Corpus& corpus, const corpus::Vocabulary& vocab) {
  std::vector<adaptation::TextInput> out;
  for (const auto& t : corpus.texts) out.push_back({t.id, t.genre, vocab.encode_all(t.sentences)});
  return out;
}

std::vector<analysis::PlotPoint> garden_path_plot(const std::vector<adaptation::CriticalTrial>& trials) {
  std::vector<double> seen, region;
  for (const auto& t : trials) {
    seen.push_back(static_cast<double>(t.trial_index + 1));
    region.push_back(t.presented_region);
  }
  std::vector<analysis::PlotPoint> out;
  if (trials.size() < 3) return out;
  const auto residuals = analysis::residualize_by_order(region, seen);
  std::map<std::pair<std::string, std::size_t>, std::pair<double, std::size_t>> acc;
  std::map<std::size_t, std::pair<double, std::size_t>> penalty;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    auto& a = acc[{corpus::to_string(trials[i].presented), trials[i].item_order}];
    a.first += residuals[i];
    ++a.second;
    auto& p = penalty[trials[i].item_order];
    p.first += trials[i].penalty;
    ++p.second;
  }
  for (const auto& [key, v] : acc) {
    out.push_back({static_cast<double>(key.second), v.first / static_cast<double>(v.second), key.first, "residual"});
  }
  for (const auto& [order, v] : penalty) {
    out.push_back({static_cast<double>(order), v.first / static_cast<double>(v.second), "ambiguous", "penalty"});
  }
  return out;
}

template <typename Real>
GardenPathSummary run_garden_path(const adaptation::Snapshot<Real>& base, const corpus::Vocabulary& vocab,
                                  const std::vector<corpus::StimulusList>& lists,
                                  const adaptation::AdaptationConfig& config, std::size_t threads) {
  std::size_t n_pairs = 0, n_fillers = 0;
  if (lists.empty()) fail(ErrorKind::data_invariant, "no stimulus lists");
  for (const auto& t : lists.front().trials) (t.is_filler() ? n_fillers : n_pairs)++;
  for (const auto& l : lists) {
    corpus::validate_stimulus_list(l, n_pairs, n_fillers);
    std::vector<corpus::StimulusItem> critical;
    for (const auto& t : l.trials) {
      if (!t.is_filler()) critical.push_back(t);
    }
    corpus::check_in_vocabulary(critical, vocab);
  }
  GardenPathSummary s;
  s.run = adaptation::run_garden_path_lists(base, lists, config, vocab, threads);
  s.trends = adaptation::garden_path_trends(s.run.trials);
  s.plot = garden_path_plot(s.run.trials);
  return s;
}

#define ADAPTLM_INSTANTIATE(R)                                                                                 \
  template DativeSweepResult run_dative_sweep<R>(const adaptation::Snapshot<R>&, const corpus::Vocabulary&,    \
                                                 const DativeSettings&, const adaptation::AdaptationConfig&,   \
                                                 std::uint64_t, const std::vector<Words>&, std::size_t);       \
  template GardenPathSummary run_garden_path<R>(const adaptation::Snapshot<R>&, const corpus::Vocabulary&,     \
                                                const std::vector<corpus::StimulusList>&,                      \
                                                const adaptation::AdaptationConfig&, std::size_t);

ADAPTLM_INSTANTIATE(float)
ADAPTLM_INSTANTIATE(double)
#undef ADAPTLM_INSTANTIATE

}  // namespace adaptlm::app
