// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails. Every tolerance and seed count is fixed here.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "adaptation/adaptation.hpp"
#include "adaptation/protocols.hpp"
#include "analysis/regions.hpp"
#include "analysis/regression.hpp"
#include "analysis/surprisal.hpp"
#include "analysis_oracles.hpp"
#include "app/experiments.hpp"
#include "app/schemas.hpp"
#include "corpus/stimuli.hpp"
#include "corpus/synthetic.hpp"
#include "corpus/vocabulary.hpp"
#include "lm/checkpoint.hpp"
#include "lm/training.hpp"
#include "lm_oracles.hpp"
#include "test_util.hpp"

using namespace adaptlm;
namespace fs = std::filesystem;

namespace {

// Criterion 1
constexpr int kGradModels = 20;
constexpr double kGradTolerance = 1e-4;
constexpr double kGradSeconds = 60;
// Criterion 2
constexpr double kCyclicPerplexity = 1.1;
constexpr double kCyclicSeconds = 120;
// Criterion 3
constexpr double kMinReduction = 0.10;
constexpr double kTextSpecificSeconds = 600;
// Criteria 4, 5, 7
constexpr int kSeeds = 10;
constexpr int kGenreMinSeeds = 8;
constexpr int kGardenPathMinSeeds = 9;
// The unambiguous slope counts as sign-inconsistent when neither sign holds
// in kGardenPathMinSeeds or more seeds.
constexpr double kGardenPathSeconds = 1800;
constexpr int kForgettingMinSeeds = 9;
// Criterion 6
constexpr std::size_t kSweepRepetitions = 10;
constexpr double kDivergenceFactor = 10.0;
// Criterion 8
constexpr int kOlsSystems = 100;
constexpr double kOlsTolerance = 1e-8;
constexpr double kPerplexityTolerance = 1e-9;

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("error: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::cout << "criterion " << id << " [" << name << "]: " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << "  ("
            << fmt(seconds_since(t0), 3) << " s)" << std::endl;
}

// Shared desk-scale base model for the adaptation criteria.
struct BaseModel {
  corpus::Vocabulary vocab;
  std::unique_ptr<adaptation::Snapshot<float>> base;
  double train_seconds = 0;
  double valid_perplexity = 0;
};

BaseModel train_base() {
  const auto t0 = Clock::now();
  const auto bg = corpus::background_corpus(20000, 7);
  const auto sentences = bg.all_sentences();
  BaseModel m{corpus::Vocabulary::build(sentences, 1), nullptr};
  const auto ids = m.vocab.encode_all(sentences);
  const std::size_t n_valid = ids.size() / 10;
  const std::vector<lm::Sentence> train(ids.begin(), ids.end() - static_cast<long>(n_valid));
  const std::vector<lm::Sentence> valid(ids.end() - static_cast<long>(n_valid), ids.end());
  lm::HyperParams h;
  h.hidden_size = 32;
  h.embed_size = 32;
  lm::TrainOptions opt;
  opt.epochs = 6;
  auto r = lm::train_base_model<float>(train, valid, m.vocab.size(), h, opt);
  m.valid_perplexity = lm::corpus_perplexity(r.params, valid);
  m.base = std::make_unique<adaptation::Snapshot<float>>("base", std::move(r.params), m.vocab.fingerprint());
  m.train_seconds = seconds_since(t0);
  return m;
}

adaptation::AdaptationConfig default_config(adaptation::StatePolicy state) {
  adaptation::AdaptationConfig c;
  c.state_policy = state;
  return c;
}

Outcome gradient_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  double worst = 0;
  for (int k = 0; k < kGradModels; ++k) {
    lm::HyperParams h;
    h.num_layers = 1 + k % 2;
    h.hidden_size = 2 + k % 7;
    h.embed_size = 3 + k % 5;
    h.seed = 100 + static_cast<std::uint64_t>(k);
    const std::size_t vocab = 6 + static_cast<std::size_t>(k) % 15;
    auto params = lm::init_parameters<double>(h, vocab);
    // Spread the weights beyond the small init so that gates saturate unevenly.
    std::normal_distribution<double> g(0.0, 0.5);
    for (auto& t : params.tensors)
      for (std::size_t i = 0; i < t.size(); ++i) t[i] += g(rng);
    const auto s = testutil::random_sentence(vocab, 2 + static_cast<std::size_t>(k) % 6, rng);
    worst = std::max(worst, testutil::max_gradient_relative_error(params, s));
  }
  const double secs = seconds_since(t0);
  return {worst < kGradTolerance && secs < kGradSeconds,
          std::to_string(kGradModels) + " models, max relative error " + fmt(worst, 3) + " (< " + fmt(kGradTolerance) +
              ")"};
}

Outcome memorizable_language() {
  const auto t0 = Clock::now();
  const auto c = corpus::cyclic_corpus({"a", "b", "c"}, 4, 200);
  const auto sentences = c.all_sentences();
  const auto vocab = corpus::Vocabulary::build(sentences, 1);
  const auto ids = vocab.encode_all(sentences);
  lm::HyperParams h;
  h.num_layers = 1;
  h.hidden_size = 16;
  h.embed_size = 16;
  h.dropout_rate = 0.0;
  lm::TrainOptions opt;
  opt.epochs = 20;
  opt.early_stop_patience = 20;
  const auto r = lm::train_base_model<float>(ids, ids, vocab.size(), h, opt);
  const double ppl = lm::corpus_perplexity(r.params, ids);
  const double secs = seconds_since(t0);
  return {ppl < kCyclicPerplexity && secs < kCyclicSeconds,
          "perplexity " + fmt(ppl, 6) + " (< " + fmt(kCyclicPerplexity) + ")"};
}

Outcome text_specific(const BaseModel& m) {
  const auto t0 = Clock::now();
  const auto tc = corpus::text_specific_corpus(11, 30, 1001);
  auto texts = app::encode_texts(tc, m.vocab);
  const auto dev = texts.front();
  texts.erase(texts.begin());
  auto cfg = default_config(adaptation::StatePolicy::carry_within_text);
  cfg.learning_rate = adaptation::tune_learning_rate(*m.base, dev, adaptation::kDefaultLearningRateGrid, cfg);
  const auto rep = adaptation::incremental_eval_texts(*m.base, texts, cfg, m.vocab);
  const double adaptive = rep.phase("adaptive").perplexity, frozen = rep.phase("non_adaptive").perplexity;
  const double reduction = 1.0 - adaptive / frozen;

  auto zero = cfg;
  zero.learning_rate = 0.0;
  const auto rep0 = adaptation::incremental_eval_texts(*m.base, texts, zero, m.vocab);
  const auto& a0 = rep0.streams.at("adaptive");
  const auto& n0 = rep0.streams.at("non_adaptive");
  bool identical = a0.size() == n0.size() &&
                   rep0.phase("adaptive").perplexity == rep0.phase("non_adaptive").perplexity;
  for (std::size_t i = 0; identical && i < a0.size(); ++i) identical = a0[i].surprisal == n0[i].surprisal;

  const double secs = seconds_since(t0) + m.train_seconds;
  return {reduction >= kMinReduction && identical && secs < kTextSpecificSeconds,
          "tuned lr " + fmt(cfg.learning_rate) + ", adaptive " + fmt(adaptive) + " vs non-adaptive " + fmt(frozen) +
              ", reduction " + fmt(100 * reduction, 3) + "% (>= " + fmt(100 * kMinReduction) + "%), lr=0 " +
              (identical ? "bit-identical" : "DIFFERS")};
}

Outcome revert_vs_continue(const BaseModel& m) {
  int wins = 0;
  std::string per_seed;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const auto gc = corpus::genre_corpus({"fairy", "science"}, 5, 20, 0.7, corpus::derive_seed(40, seed));
    const auto texts = app::encode_texts(gc, m.vocab);
    const auto rep = adaptation::genre_protocol(*m.base, texts, default_config(adaptation::StatePolicy::carry_within_text),
                                                m.vocab);
    const double never = rep.phase("all/never").perplexity, per_text = rep.phase("all/per_text").perplexity;
    if (never <= per_text) ++wins;
    per_seed += " " + fmt(never) + "/" + fmt(per_text);
  }
  return {wins >= kGenreMinSeeds, "never <= per_text in " + std::to_string(wins) + "/" + std::to_string(kSeeds) +
                                      " seeds (>= " + std::to_string(kGenreMinSeeds) + "); never/per_text:" + per_seed};
}

Outcome garden_path(const BaseModel& m) {
  const auto t0 = Clock::now();
  int amb_negative = 0, unamb_positive = 0, unamb_negative = 0;
  std::string slopes;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const auto mat = app::garden_path_materials(40, 80, corpus::derive_seed(50, seed));
    const auto s = app::run_garden_path(*m.base, m.vocab, mat.lists,
                                        default_config(adaptation::StatePolicy::reset_each_sentence));
    const double amb = s.trends.ambiguous.coefficient("item_order");
    const double un = s.trends.unambiguous.coefficient("item_order");
    amb_negative += amb < 0;
    unamb_positive += un > 0;
    unamb_negative += un < 0;
    slopes += " " + fmt(amb, 3) + "/" + fmt(un, 3) + "(t=" + fmt(s.trends.unambiguous.t_value("item_order"), 2) + ")";
  }
  const bool amb_ok = amb_negative >= kGardenPathMinSeeds;
  const bool unamb_inconsistent = unamb_positive < kGardenPathMinSeeds && unamb_negative < kGardenPathMinSeeds;
  const double secs = seconds_since(t0) + m.train_seconds;
  return {amb_ok && unamb_inconsistent && secs < kGardenPathSeconds,
          "ambiguous slope < 0 in " + std::to_string(amb_negative) + "/" + std::to_string(kSeeds) + " (>= " +
              std::to_string(kGardenPathMinSeeds) + "); unambiguous slope +" + std::to_string(unamb_positive) + "/-" +
              std::to_string(unamb_negative) + " (inconsistent needs both < " + std::to_string(kGardenPathMinSeeds) +
              "); ambiguous/unambiguous:" + slopes};
}

Outcome sweep_shape(const BaseModel& m) {
  app::DativeSettings s;
  s.repetitions = kSweepRepetitions;
  const auto r = app::run_dative_sweep(*m.base, m.vocab, s, default_config(adaptation::StatePolicy::reset_each_sentence), 60);
  const double best = r.best_learning_rate;
  const auto rel = [&](double lr, const char* set) {
    return app::summary_cell(r, lr, set).mean / app::summary_cell(r, 0.0, set).mean;
  };
  const bool both_below = rel(best, app::kSharedSyntax) < 1.0 && rel(best, app::kSharedLexicon) < 1.0;
  // Degradation: rise in perplexity relative to baseline from best to 10x best.
  const double tenfold = best * 10.0;
  bool on_grid = false;
  for (double g : s.grid) on_grid = on_grid || std::abs(g - tenfold) <= 1e-12 * tenfold;
  double syn_drop = NAN, lex_drop = NAN;
  if (on_grid) {
    syn_drop = rel(tenfold, app::kSharedSyntax) - rel(best, app::kSharedSyntax);
    lex_drop = rel(tenfold, app::kSharedLexicon) - rel(best, app::kSharedLexicon);
  }
  const bool syntax_penalized = on_grid && syn_drop > lex_drop;
  const double top = s.grid.back();
  bool top_blown = true;
  std::string top_detail;
  for (const char* set : {app::kSharedSyntax, app::kSharedLexicon}) {
    const auto& c = app::summary_cell(r, top, set);
    const bool blown = c.diverged_runs > 0 || !(c.mean <= kDivergenceFactor * app::summary_cell(r, 0.0, set).mean);
    top_blown = top_blown && blown;
    top_detail += std::string(" ") + set + "=" + (c.diverged_runs > 0 ? std::to_string(c.diverged_runs) + " diverged" : fmt(c.mean));
  }
  return {both_below && syntax_penalized && top_blown,
          "best lr " + fmt(best) + ": syntax " + fmt(rel(best, app::kSharedSyntax)) + "x, lexicon " +
              fmt(rel(best, app::kSharedLexicon)) + "x of baseline; at " + fmt(tenfold) + " syntax +" + fmt(syn_drop) +
              " vs lexicon +" + fmt(lex_drop) + "; top lr " + fmt(top) + ":" + top_detail};
}

Outcome forgetting(const BaseModel& m) {
  int ordered = 0;
  std::string per_seed;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const auto gc = corpus::genre_corpus({"fairy", "science"}, 40, 50, 0.7, corpus::derive_seed(70, seed));
    const auto splits = app::forgetting_splits(gc, m.vocab, 1000, 1000, corpus::derive_seed(71, seed));
    const auto sum = adaptation::forgetting_over_genres(*m.base, splits,
                                                        default_config(adaptation::StatePolicy::reset_each_sentence));
    if (sum.mean_b < sum.mean_c && sum.mean_c < sum.mean_a) ++ordered;
    per_seed += " " + fmt(sum.mean_a) + "/" + fmt(sum.mean_b) + "/" + fmt(sum.mean_c);
  }
  // Revert after a long adaptation run.
  adaptation::AdaptiveModel<float> model(*m.base, default_config(adaptation::StatePolicy::carry_within_text));
  const auto bg = corpus::background_corpus(300, 77);
  for (const auto& s : m.vocab.encode_all(bg.all_sentences())) model.adapt_on_sentence(s);
  const bool moved = model.params() != m.base->params();
  model.revert(*m.base);
  const bool exact = moved && model.params() == m.base->params() &&
                     adaptation::parameters_fingerprint(model.params()) == m.base->weights_fingerprint();
  return {ordered >= kForgettingMinSeeds && exact,
          "b < c < a in " + std::to_string(ordered) + "/" + std::to_string(kSeeds) + " seeds (>= " +
              std::to_string(kForgettingMinSeeds) + "), revert " + (exact ? "bit-exact" : "NOT exact") + "; a/b/c:" +
              per_seed};
}

Outcome analysis_oracles() {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst_ols = 0;
  for (int k = 0; k < kOlsSystems; ++k) {
    const std::size_t n = 20 + static_cast<std::size_t>(k) * 3, p = 1 + static_cast<std::size_t>(k) % 5;
    std::vector<double> x0(n), y(n);
    for (auto& v : x0) v = g(rng);
    auto d = analysis::Design::intercept_and("x0", x0);
    for (std::size_t j = 1; j < p; ++j) {
      std::vector<double> xj(n);
      for (auto& v : xj) v = g(rng) * (1.0 + static_cast<double>(j));
      d.add("x" + std::to_string(j), xj);
    }
    for (auto& v : y) v = 2.0 * g(rng);
    for (std::size_t j = 0; j < d.columns.size(); ++j)
      for (std::size_t i = 0; i < n; ++i) y[i] += (0.5 - static_cast<double>(j)) * d.columns[j][i];
    const auto fit = analysis::ols_fit(d, y);
    const auto oracle = testutil::normal_equations(d.columns, y);
    for (std::size_t j = 0; j < oracle.size(); ++j) worst_ols = std::max(worst_ols, std::abs(fit.coefficients[j] - oracle[j]));
  }
  double worst_ppl = 0;
  std::uniform_real_distribution<double> u(0.0, 12.0);
  for (int k = 0; k < 100; ++k) {
    std::vector<analysis::SurprisalRecord> recs(1 + static_cast<std::size_t>(k) * 7);
    double sum = 0;
    for (auto& r : recs) sum += (r.surprisal = u(rng));
    const double expected = std::exp(sum / static_cast<double>(recs.size()));
    worst_ppl = std::max(worst_ppl, std::abs(analysis::perplexity(recs) - expected) / expected);
  }
  bool zero = true;
  const auto items = corpus::generate_garden_path_items(corpus::default_lexicon().garden_path, 10, 8);
  for (const auto& item : items) {
    std::vector<analysis::SurprisalRecord> recs;
    for (std::size_t i = 0; i < item.tokens.size(); ++i) {
      analysis::SurprisalRecord r;
      r.token = item.tokens[i];
      r.sentence_position = i + 1;
      r.surprisal = u(rng);
      recs.push_back(r);
    }
    zero = zero && analysis::disambiguation_penalty(recs, item, recs, item) == 0.0;
  }
  return {worst_ols <= kOlsTolerance && worst_ppl <= kPerplexityTolerance && zero,
          "ols max |diff| " + fmt(worst_ols, 3) + " (<= " + fmt(kOlsTolerance) + "), perplexity max rel diff " +
              fmt(worst_ppl, 3) + " (<= " + fmt(kPerplexityTolerance) + "), identical-input penalty " +
              (zero ? "0" : "NONZERO")};
}

int cli(const std::string& args) {
  const std::string cmd = std::string(ADAPTLM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  const std::string prefix = root.string();
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::string s = testutil::slurp(e.path());
    for (std::size_t p = s.find(prefix); p != std::string::npos; p = s.find(prefix, p + 5)) s.replace(p, prefix.size(), "$ROOT");
    out[fs::relative(e.path(), root).string()] = s;
  }
  return out;
}

Outcome determinism_and_formats() {
  // Every command, in pipeline order; "$R" is the run root.
  const std::vector<std::pair<std::string, std::string>> steps{
      {"bg", "gen-stimuli kind=background sentences=4000 seed=3"},
      {"ts", "gen-stimuli kind=text_specific texts=3 per_text=8"},
      {"gc", "gen-stimuli kind=genres texts=2 per_text=30"},
      {"cy", "gen-stimuli kind=cyclic"},
      {"gg", "gen-stimuli kind=gardenpath n_pairs=6 n_fillers=8"},
      {"gd", "gen-stimuli kind=dative n_pairs=20 n_adapt=10 n_new=10 n_fillers=10"},
      {"m", "train corpus=$R/bg/corpus.txt layers=1 hidden=8 embed=8 epochs=2"},
      {"ae", "adapt-eval corpus=$R/ts/corpus.txt lr=tune $M"},
      {"gp", "gardenpath lists=$R/gg/lists.tsv $M"},
      {"ds", "dative-sweep n_pairs=20 n_adapt=10 n_new=10 n_fillers=10 repetitions=2 $M"},
      {"fg", "forgetting corpus=$R/gc/corpus.txt n_adapt=20 n_heldout=20 controls=true $M"},
      {"lm", "export-lmem adaptive=$R/ae/surprisal_adaptive.tsv non_adaptive=$R/ae/surprisal_non_adaptive.tsv"},
  };
  testutil::TempDir tmp;
  std::vector<std::map<std::string, std::string>> runs;
  for (const std::string run : {"r1", "r2"}) {
    const fs::path root = tmp / run;
    fs::create_directories(root);
    for (auto [dir, args] : steps) {
      const std::string model = "checkpoint=$R/m/model.ckpt vocab=$R/m/vocab.txt";
      for (std::size_t p; (p = args.find("$M")) != std::string::npos;) args.replace(p, 2, model);
      for (std::size_t p; (p = args.find("$R")) != std::string::npos;) args.replace(p, 2, root.string());
      const auto name = args.substr(0, args.find(' '));
      const int code = cli(args + " precision=f64 threads=1 out_dir=" + (root / dir).string());
      if (code != 0) return {false, name + " exited " + std::to_string(code)};
    }
    runs.push_back(tree(root));
  }
  std::size_t differing = 0;
  std::string first_diff;
  for (const auto& [name, contents] : runs[0]) {
    const auto it = runs[1].find(name);
    if (it == runs[1].end() || it->second != contents) {
      if (!differing++) first_diff = name;
    }
  }
  if (runs[0].size() != runs[1].size()) ++differing;

  std::size_t validated = 0;
  std::string invalid;
  for (const auto& [dir, args] : steps) {
    try {
      validated += app::validate_output_dir(tmp / "r1" / dir).size();
    } catch (const std::exception& e) {
      invalid = e.what();
    }
  }

  // Checkpoint round trip in both precisions.
  bool round_trip = true;
  {
    const auto ck = lm::load_checkpoint<double>(tmp / "r1/m/model.ckpt");
    lm::save_checkpoint(ck, tmp / "again.ckpt");
    const auto back = lm::load_checkpoint<double>(tmp / "again.ckpt");
    round_trip = back.params == ck.params && back.hyper == ck.hyper &&
                 testutil::slurp(tmp / "again.ckpt") == testutil::slurp(tmp / "r1/m/model.ckpt");
    lm::Checkpoint<float> narrow;
    narrow.hyper = ck.hyper;
    narrow.vocab_fingerprint = ck.vocab_fingerprint;
    narrow.params = lm::load_checkpoint<float>(tmp / "r1/m/model.ckpt").params;
    lm::save_checkpoint(narrow, tmp / "f32.ckpt");
    round_trip = round_trip && lm::load_checkpoint<float>(tmp / "f32.ckpt").params == narrow.params;
  }
  return {differing == 0 && invalid.empty() && validated > 0 && round_trip,
          std::to_string(runs[0].size()) + " output files, " + std::to_string(differing) + " differ" +
              (first_diff.empty() ? "" : " (first: " + first_diff + ")") + "; " + std::to_string(validated) +
              " validated against schemas" + (invalid.empty() ? "" : " FAILED: " + invalid) + "; checkpoint round trip " +
              (round_trip ? "bit-exact" : "NOT exact")};
}

}  // namespace

int main() {
  report(1, "gradient oracle", gradient_oracle);
  report(2, "memorizable language", memorizable_language);

  std::cout << "training shared base model..." << std::endl;
  const BaseModel m = train_base();
  std::cout << "base model: vocab " << m.vocab.size() << ", valid perplexity " << fmt(m.valid_perplexity) << ", "
            << fmt(m.train_seconds, 3) << " s" << std::endl;
  report(3, "text-specific adaptation", [&] { return text_specific(m); });
  report(4, "revert vs continue", [&] { return revert_vs_continue(m); });
  report(5, "garden-path adaptation", [&] { return garden_path(m); });
  report(6, "dative sweep shape", [&] { return sweep_shape(m); });
  report(7, "forgetting", [&] { return forgetting(m); });
  report(8, "analysis oracles", analysis_oracles);
  report(9, "determinism and formats", determinism_and_formats);

  std::cout << (failures == 0 ? "all criteria PASS" : std::to_string(failures) + " criteria FAIL") << std::endl;
  return failures == 0 ? 0 : 1;
}
