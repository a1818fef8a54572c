#include "adaptation/protocols.hpp"

#include <cmath>
#include <limits>
#include <set>

#include "analysis/export.hpp"
#include "analysis/regions.hpp"
#include "error.hpp"
#include "parallel.hpp"

namespace adaptlm::adaptation {

const PhaseResult& ProtocolReport::phase(const std::string& label) const {
  for (const auto& p : phases) {
    if (p.label == label) return p;
  }
  fail(ErrorKind::invalid_argument, "report '" + protocol + "' has no phase '" + label + "'");
}

std::vector<std::pair<std::string, std::string>> describe(const AdaptationConfig& c) {
  return {{"learning_rate", analysis::format_number(c.learning_rate)},
          {"revert_policy", to_string(c.revert_policy)},
          {"state_policy", to_string(c.state_policy)},
          {"update_with_dropout", c.update_with_dropout ? "true" : "false"},
          {"dropout_rate", analysis::format_number(c.dropout_rate)},
          {"clip_norm", c.clip_norm ? analysis::format_number(*c.clip_norm) : "off"},
          {"loss_reduction", lm::to_string(c.loss_reduction)},
          {"seed", std::to_string(c.seed)}};
}

namespace {

using analysis::SurprisalRecord;
using Records = std::vector<SurprisalRecord>;

// Token-weighted perplexity over the chosen records, +inf once any is non-finite.
PhaseResult phase_of(std::string label, const Records& records, bool skip_first_sentence = false) {
  std::vector<double> nll;
  for (const auto& r : records) {
    if (skip_first_sentence && r.sentence_index == 0) continue;
    nll.push_back(r.surprisal);
  }
  PhaseResult p;
  p.label = std::move(label);
  p.tokens = nll.size();
  p.perplexity = nll.empty() ? std::numeric_limits<double>::quiet_NaN() : analysis::perplexity_from_nll(nll);
  p.diverged = !std::isfinite(p.perplexity) && !nll.empty();
  return p;
}

void append(Records& dst, Records src) {
  dst.insert(dst.end(), std::make_move_iterator(src.begin()), std::make_move_iterator(src.end()));
}

// Runs one text through `model` from a zero state; adapts when `adapt`.
template <typename Real>
Records run_text(AdaptiveModel<Real>& model, const TextInput& text, bool adapt, const corpus::Vocabulary& vocab) {
  model.begin_text();
  Records out;
  std::size_t first = 0;
  for (std::size_t k = 0; k < text.sentences.size(); ++k) {
    const auto& s = text.sentences[k];
    const auto lps = adapt ? model.adapt_on_sentence(s).target_log_probs : model.score(s);
    append(out, analysis::make_records({text.id, k, first, nullptr}, s, lps, vocab));
    first += s.size() + 1;
  }
  return out;
}

template <typename Real>
double frozen_perplexity(const ModelParameters<Real>& params, const std::vector<Sentence>& sentences) {
  return lm::corpus_perplexity(params, sentences);
}

AdaptationConfig with_rate(AdaptationConfig c, double lr) {
  c.learning_rate = lr;
  return c;
}

}  // namespace

template <typename Real>
ProtocolReport incremental_eval(const Snapshot<Real>& base, const TextInput& text, const AdaptationConfig& config,
                                const corpus::Vocabulary& vocab) {
  return incremental_eval_texts(base, {text}, config, vocab);
}

template <typename Real>
ProtocolReport incremental_eval_texts(const Snapshot<Real>& base, const std::vector<TextInput>& texts,
                                      const AdaptationConfig& config, const corpus::Vocabulary& vocab,
                                      std::size_t threads) {
  if (texts.empty()) fail(ErrorKind::invalid_argument, "incremental_eval: no texts");
  for (const auto& t : texts) {
    if (t.sentences.empty()) fail(ErrorKind::invalid_argument, "incremental_eval: text '" + t.id + "' is empty");
  }
  std::vector<Records> adaptive(texts.size()), frozen(texts.size());
  std::vector<char> diverged(texts.size(), 0);
  parallel_for(texts.size(), threads, [&](std::size_t i) {
    AdaptiveModel<Real> model(base, config);
    adaptive[i] = run_text(model, texts[i], true, vocab);
    diverged[i] = model.diverged();
    AdaptiveModel<Real> control(base, with_rate(config, 0.0));
    frozen[i] = run_text(control, texts[i], false, vocab);
  });
  ProtocolReport report;
  report.protocol = "incremental_eval";
  report.config = describe(config);
  report.seed = config.seed;
  auto& a = report.streams["adaptive"];
  auto& n = report.streams["non_adaptive"];
  for (std::size_t i = 0; i < texts.size(); ++i) {
    append(a, std::move(adaptive[i]));
    append(n, std::move(frozen[i]));
    report.diverged = report.diverged || diverged[i];
  }
  report.phases.push_back(phase_of("adaptive", a));
  report.phases.push_back(phase_of("non_adaptive", n));
  report.phases.push_back(phase_of("adaptive/later", a, true));
  report.phases.push_back(phase_of("non_adaptive/later", n, true));
  return report;
}

template <typename Real>
ProtocolReport genre_protocol(const Snapshot<Real>& base, const std::vector<TextInput>& texts,
                              const AdaptationConfig& config, const corpus::Vocabulary& vocab,
                              std::size_t threads) {
  if (texts.empty()) fail(ErrorKind::invalid_argument, "genre_protocol: no texts");
  std::vector<std::string> genres;
  for (const auto& t : texts) {
    if (t.sentences.empty()) fail(ErrorKind::invalid_argument, "genre_protocol: text '" + t.id + "' is empty");
    if (std::find(genres.begin(), genres.end(), t.genre) == genres.end()) genres.push_back(t.genre);
  }
  // Revert per text: every text independently from base.
  std::vector<Records> per_text(texts.size());
  std::vector<char> diverged(texts.size() + genres.size(), 0);
  AdaptationConfig revert = config;
  revert.revert_policy = RevertPolicy::per_text;
  AdaptationConfig keep = config;
  keep.revert_policy = RevertPolicy::never;
  parallel_for(texts.size(), threads, [&](std::size_t i) {
    AdaptiveModel<Real> model(base, revert);
    per_text[i] = run_text(model, texts[i], true, vocab);
    diverged[i] = model.diverged();
  });
  // Never revert: one model per genre carried through its texts in order.
  std::vector<Records> never(genres.size());
  parallel_for(genres.size(), threads, [&](std::size_t g) {
    AdaptiveModel<Real> model(base, keep);
    for (const auto& t : texts) {
      if (t.genre == genres[g]) append(never[g], run_text(model, t, true, vocab));
    }
    diverged[texts.size() + g] = model.diverged();
  });

  ProtocolReport report;
  report.protocol = "genre_protocol";
  report.config = describe(config);
  report.seed = config.seed;
  auto& all_revert = report.streams["per_text"];
  auto& all_never = report.streams["never"];
  for (std::size_t g = 0; g < genres.size(); ++g) {
    Records genre_revert;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      if (texts[i].genre == genres[g]) genre_revert.insert(genre_revert.end(), per_text[i].begin(), per_text[i].end());
    }
    report.phases.push_back(phase_of(genres[g] + "/per_text", genre_revert));
    report.phases.push_back(phase_of(genres[g] + "/never", never[g]));
    report.phases.push_back(phase_of(genres[g] + "/per_text/later", genre_revert, true));
    report.phases.push_back(phase_of(genres[g] + "/never/later", never[g], true));
    append(all_revert, std::move(genre_revert));
    all_never.insert(all_never.end(), never[g].begin(), never[g].end());
  }
  report.phases.push_back(phase_of("all/per_text", all_revert));
  report.phases.push_back(phase_of("all/never", all_never));
  report.phases.push_back(phase_of("all/per_text/later", all_revert, true));
  report.phases.push_back(phase_of("all/never/later", all_never, true));
  for (char d : diverged) report.diverged = report.diverged || d;
  return report;
}

template <typename Real>
ForgettingResult run_forgetting_protocol(const Snapshot<Real>& base, const SentenceSet& g1_adapt,
                                         const SentenceSet& g2_adapt, const SentenceSet& g1_heldout,
                                         const AdaptationConfig& config) {
  const std::set<std::string> adapt_keys(g1_adapt.keys.begin(), g1_adapt.keys.end());
  for (const auto& k : g1_heldout.keys) {
    if (adapt_keys.contains(k)) {
      fail(ErrorKind::data_invariant, "forgetting protocol: held-out sentence '" + k + "' is also in the " +
                                          g1_adapt.name + " adaptation set");
    }
  }
  if (g1_heldout.sentences.empty()) fail(ErrorKind::invalid_argument, "forgetting protocol: empty held-out set");
  ForgettingResult r;
  r.g1 = g1_adapt.name;
  r.g2 = g2_adapt.name;
  r.a = frozen_perplexity(base.params(), g1_heldout.sentences);
  AdaptiveModel<Real> model(base, config);
  for (const auto& s : g1_adapt.sentences) model.adapt_on_sentence(s);
  r.b = frozen_perplexity(model.params(), g1_heldout.sentences);
  for (const auto& s : g2_adapt.sentences) model.adapt_on_sentence(s);
  r.c = frozen_perplexity(model.params(), g1_heldout.sentences);
  r.diverged = model.diverged();
  return r;
}

template <typename Real>
ForgettingSummary forgetting_over_genres(const Snapshot<Real>& base, const std::vector<GenreSplit>& splits,
                                         const AdaptationConfig& config, bool include_controls,
                                         std::size_t threads) {
  if (splits.size() < 2) fail(ErrorKind::invalid_argument, "forgetting protocol needs at least 2 genres");
  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  for (std::size_t i = 0; i < splits.size(); ++i) {
    for (std::size_t j = 0; j < splits.size(); ++j) {
      if (i != j || include_controls) jobs.emplace_back(i, j);
    }
  }
  std::vector<ForgettingResult> results(jobs.size());
  parallel_for(jobs.size(), threads, [&](std::size_t k) {
    const auto& g1 = splits[jobs[k].first];
    const auto& g2 = splits[jobs[k].second];
    results[k] = run_forgetting_protocol(base, g1.adapt, g2.adapt, g1.heldout, config);
    results[k].g1 = g1.genre;
    results[k].g2 = g2.genre;
  });
  ForgettingSummary out;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    (jobs[k].first == jobs[k].second ? out.controls : out.pairs).push_back(results[k]);
  }
  for (const auto& r : out.pairs) {
    out.mean_a += r.a;
    out.mean_b += r.b;
    out.mean_c += r.c;
  }
  const auto n = static_cast<double>(out.pairs.size());
  out.mean_a /= n;
  out.mean_b /= n;
  out.mean_c /= n;
  return out;
}

template <typename Real>
std::vector<SweepCell> learning_rate_sweep(const Snapshot<Real>& base, const std::vector<Sentence>& adaptation_stream,
                                           const std::vector<SentenceSet>& test_sets, const std::vector<double>& grid,
                                           const AdaptationConfig& config, std::size_t threads) {
  if (grid.empty()) fail(ErrorKind::invalid_argument, "learning_rate_sweep: empty grid");
  std::vector<std::vector<SweepCell>> rows(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t g) {
    AdaptiveModel<Real> model(base, with_rate(config, grid[g]));
    for (const auto& s : adaptation_stream) model.adapt_on_sentence(s);
    for (const auto& set : test_sets) {
      SweepCell cell;
      cell.learning_rate = grid[g];
      cell.test_set = set.name;
      cell.perplexity = frozen_perplexity(model.params(), set.sentences);
      cell.diverged = model.diverged() || !std::isfinite(cell.perplexity);
      rows[g].push_back(cell);
    }
  });
  std::vector<SweepCell> out;
  for (auto& r : rows) out.insert(out.end(), r.begin(), r.end());
  return out;
}

template <typename Real>
double tune_learning_rate(const Snapshot<Real>& base, const TextInput& dev, const std::vector<double>& grid,
                          const AdaptationConfig& config) {
  if (grid.empty()) fail(ErrorKind::invalid_argument, "tune_learning_rate: empty grid");
  double best_lr = grid.front();
  double best = std::numeric_limits<double>::infinity();
  for (double lr : grid) {
    AdaptiveModel<Real> model(base, with_rate(config, lr));
    std::vector<double> nll;
    model.begin_text();
    for (const auto& s : dev.sentences) {
      for (double lp : model.adapt_on_sentence(s).target_log_probs) nll.push_back(-lp);
    }
    const double ppl = analysis::perplexity_from_nll(nll);
    if (ppl < best) {
      best = ppl;
      best_lr = lr;
    }
  }
  return best_lr;
}

template <typename Real>
GardenPathRun run_garden_path_lists(const Snapshot<Real>& base, const std::vector<corpus::StimulusList>& lists,
                                    const AdaptationConfig& config, const corpus::Vocabulary& vocab,
                                    std::size_t threads) {
  struct ListOut {
    std::vector<CriticalTrial> trials;
    Records records;
    bool diverged = false;
  };
  std::vector<ListOut> outs(lists.size());
  parallel_for(lists.size(), threads, [&](std::size_t li) {
    const auto& list = lists[li];
    AdaptiveModel<Real> model(base, config);
    auto& out = outs[li];
    const std::string text_id = "list" + std::to_string(list.list_id);
    std::size_t first = 0, order = 0;
    for (std::size_t t = 0; t < list.trials.size(); ++t) {
      const auto& item = list.trials[t];
      const auto ids = vocab.encode(item.tokens);
      if (!item.is_filler()) {
        if (item.condition != corpus::Condition::ambiguous && item.condition != corpus::Condition::unambiguous) {
          fail(ErrorKind::data_invariant, "list " + std::to_string(list.list_id) + " holds a non-garden-path item");
        }
        // The other version is rebuilt from the presented one.
        corpus::StimulusItem other = item;
        other.condition = corpus::counterpart(item.condition);
        if (item.condition == corpus::Condition::ambiguous) {
          other.tokens.insert(other.tokens.begin() + 3, {"who", "were"});
          other.region_start += 2;
        } else {
          other.tokens.erase(other.tokens.begin() + 3, other.tokens.begin() + 5);
          other.region_start -= 2;
        }
        const auto other_ids = vocab.encode(other.tokens);
        const auto other_records =
            analysis::make_records({text_id, t, 0, &other}, other_ids, model.peek(other_ids), vocab);
        const auto outcome = model.adapt_on_sentence(ids);
        auto records = analysis::make_records({text_id, t, first, &item}, ids, outcome.target_log_probs, vocab);
        const bool amb = item.condition == corpus::Condition::ambiguous;
        const auto& amb_item = amb ? item : other;
        const auto& unamb_item = amb ? other : item;
        const auto& amb_records = amb ? records : other_records;
        const auto& unamb_records = amb ? other_records : records;
        CriticalTrial trial;
        trial.list_id = list.list_id;
        trial.trial_index = t;
        trial.item_order = ++order;
        trial.pair_id = item.pair_id;
        trial.presented = item.condition;
        trial.ambiguous_region = analysis::region_mean_surprisal(amb_records, amb_item);
        trial.unambiguous_region = analysis::region_mean_surprisal(unamb_records, unamb_item);
        trial.penalty = analysis::disambiguation_penalty(amb_records, amb_item, unamb_records, unamb_item);
        trial.presented_region = amb ? trial.ambiguous_region : trial.unambiguous_region;
        out.trials.push_back(trial);
        append(out.records, std::move(records));
      } else {
        const auto outcome = model.adapt_on_sentence(ids);
        append(out.records, analysis::make_records({text_id, t, first, &item}, ids, outcome.target_log_probs, vocab));
      }
      first += ids.size() + 1;
    }
    out.diverged = model.diverged();
  });
  GardenPathRun run;
  for (auto& o : outs) {
    run.trials.insert(run.trials.end(), o.trials.begin(), o.trials.end());
    append(run.records, std::move(o.records));
    run.diverged = run.diverged || o.diverged;
  }
  return run;
}

GardenPathTrends garden_path_trends(const std::vector<CriticalTrial>& trials) {
  std::vector<analysis::TrialValue> amb, unamb;
  for (const auto& t : trials) {
    amb.push_back({t.list_id, static_cast<double>(t.item_order), t.penalty, "ambiguous"});
    if (t.presented == corpus::Condition::unambiguous) {
      unamb.push_back({t.list_id, static_cast<double>(t.item_order), t.presented_region, "unambiguous"});
    }
  }
  return {analysis::penalty_trend(amb), analysis::penalty_trend(unamb)};
}

#define ADAPTLM_INSTANTIATE(R)                                                                                    \
  template ProtocolReport incremental_eval<R>(const Snapshot<R>&, const TextInput&, const AdaptationConfig&,      \
                                              const corpus::Vocabulary&);                                         \
  template ProtocolReport incremental_eval_texts<R>(const Snapshot<R>&, const std::vector<TextInput>&,            \
                                                    const AdaptationConfig&, const corpus::Vocabulary&,           \
                                                    std::size_t);                                                 \
  template ProtocolReport genre_protocol<R>(const Snapshot<R>&, const std::vector<TextInput>&,                    \
                                            const AdaptationConfig&, const corpus::Vocabulary&, std::size_t);     \
  template ForgettingResult run_forgetting_protocol<R>(const Snapshot<R>&, const SentenceSet&,                    \
                                                       const SentenceSet&, const SentenceSet&,                    \
                                                       const AdaptationConfig&);                                  \
  template ForgettingSummary forgetting_over_genres<R>(const Snapshot<R>&, const std::vector<GenreSplit>&,        \
                                                       const AdaptationConfig&, bool, std::size_t);               \
  template std::vector<SweepCell> learning_rate_sweep<R>(const Snapshot<R>&, const std::vector<Sentence>&,        \
                                                         const std::vector<SentenceSet>&,                         \
                                                         const std::vector<double>&, const AdaptationConfig&,     \
                                                         std::size_t);                                            \
  template double tune_learning_rate<R>(const Snapshot<R>&, const TextInput&, const std::vector<double>&,         \
                                        const AdaptationConfig&);                                                 \
  template GardenPathRun run_garden_path_lists<R>(const Snapshot<R>&, const std::vector<corpus::StimulusList>&,   \
                                                  const AdaptationConfig&, const corpus::Vocabulary&, std::size_t);

ADAPTLM_INSTANTIATE(float)
ADAPTLM_INSTANTIATE(double)
#undef ADAPTLM_INSTANTIATE

}  // namespace adaptlm::adaptation
