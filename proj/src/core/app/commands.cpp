#include "app/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "adaptation/protocols.hpp"
#include "analysis/export.hpp"
#include "app/experiments.hpp"
#include "app/report_io.hpp"
#include "corpus/corpus_io.hpp"
#include "corpus/synthetic.hpp"
#include "lm/checkpoint.hpp"
#include "lm/training.hpp"

#ifndef ADAPTLM_VERSION
#define ADAPTLM_VERSION "0.0.0"
#endif

namespace adaptlm::app {

namespace fs = std::filesystem;
using analysis::format_number;

const char* tool_version() { return ADAPTLM_VERSION; }

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage:
    case ErrorKind::invalid_argument:
    case ErrorKind::io:
      return kExitUsage;
    case ErrorKind::shape:
    case ErrorKind::data_invariant:
    case ErrorKind::format:
      return kExitData;
    case ErrorKind::diverged:
      return kExitDiverged;
  }
  return kExitUsage;
}

namespace {

struct KeySpec {
  std::string name;
  std::string help;
};

const std::vector<KeySpec> kCommonKeys{
    {"out_dir", "output directory (created if missing; required)"},
    {"seed", "master seed (default 1)"},
    {"precision", "f32 or f64 arithmetic (default f32)"},
    {"threads", "worker threads for independent runs (default: all cores)"},
};

const std::vector<KeySpec> kModelKeys{
    {"checkpoint", "model checkpoint written by train (required)"},
    {"vocab", "vocabulary written by train (required)"},
};

const std::vector<KeySpec> kAdaptKeys{
    {"revert", "per_text or never (default per_text)"},
    {"state", "carry_within_text or reset_each_sentence"},
    {"update_dropout", "apply dropout during adaptation updates (default false)"},
    {"update_dropout_rate", "dropout rate for adaptation updates (default 0.2)"},
    {"adapt_clip", "gradient-norm clip for adaptation, or off (default off)"},
    {"loss", "mean or sum over sentence tokens (default mean)"},
};

const std::map<std::string, std::vector<std::vector<KeySpec>>>& command_keys() {
  static const std::map<std::string, std::vector<std::vector<KeySpec>>> m{
      {"train",
       {kCommonKeys,
        {{"corpus", "training corpus (required)"},
         {"valid_corpus", "validation corpus (default: tail of the training corpus)"},
         {"valid_fraction", "share of sentences held out when valid_corpus is absent (default 0.1)"},
         {"min_count", "minimum token count for the vocabulary (default 1)"},
         {"layers", "LSTM layers (default 2)"},
         {"hidden", "hidden units per layer (default 64)"},
         {"embed", "embedding size (default 64)"},
         {"dropout", "training dropout (default 0.2)"},
         {"clip_norm", "gradient-norm clip or off (default 0.25)"},
         {"lr", "initial SGD learning rate (default 20)"},
         {"lr_decay", "divide lr by this after an epoch without improvement (default 4)"},
         {"epochs", "maximum epochs (default 10)"},
         {"patience", "epochs without improvement before stopping (default 2)"},
         {"batch_size", "sentences per update (default 16)"},
         {"loss", "mean or sum over tokens (default mean)"}}}},
      {"adapt-eval",
       {kCommonKeys, kModelKeys, kAdaptKeys,
        {{"corpus", "evaluation corpus (required)"},
         {"lr", "adaptation learning rate or 'tune' (default 0.2)"},
         {"tune_text", "text id used to tune lr; excluded from evaluation (default: first text)"},
         {"tune_grid", "comma-separated candidate rates for lr=tune"}}}},
      {"gardenpath",
       {kCommonKeys, kModelKeys, kAdaptKeys,
        {{"lr", "adaptation learning rate (default 0.2)"},
         {"lists", "stimulus lists TSV (default: generate)"},
         {"n_pairs", "item pairs to generate (default 40)"},
         {"n_fillers", "fillers to generate (default 80)"},
         {"filler_corpus", "corpus to draw fillers from (default: synthetic background)"}}}},
      {"dative-sweep",
       {kCommonKeys, kModelKeys, kAdaptKeys,
        {{"direction", "DO or PO (default DO)"},
         {"repetitions", "independent material sets (default 10)"},
         {"grid", "comma-separated learning rates (default 0,0.002,0.02,0.2,2,20,200)"},
         {"n_pairs", "dative pairs per repetition (default 200)"},
         {"n_adapt", "pairs in the adaptation stream (default 100)"},
         {"n_new", "pairs supplying the shared-syntax test (default 100)"},
         {"n_fillers", "fillers in the adaptation stream (default 1000)"},
         {"filler_corpus", "corpus to draw fillers from (default: synthetic background)"}}}},
      {"forgetting",
       {kCommonKeys, kModelKeys, kAdaptKeys,
        {{"corpus", "genre-labelled corpus (required)"},
         {"lr", "adaptation learning rate (default 0.2)"},
         {"genres", "comma-separated genres (default: all in the corpus)"},
         {"n_adapt", "adaptation sentences per genre (default 1000)"},
         {"n_heldout", "held-out sentences per genre (default 1000)"},
         {"controls", "also run G1 = G2 (default false)"}}}},
      {"gen-stimuli",
       {kCommonKeys,
        {{"kind", "gardenpath, dative, background, genres, text_specific or cyclic (required)"},
         {"n_pairs", "item pairs (gardenpath 40, dative 200)"},
         {"n_fillers", "fillers (gardenpath 80, dative 1000)"},
         {"filler_corpus", "corpus to draw fillers from"},
         {"direction", "dative construction to adapt on (default DO)"},
         {"n_adapt", "dative pairs in the adaptation stream (default 100)"},
         {"n_new", "dative pairs for the shared-syntax test (default 100)"},
         {"sentences", "background or cyclic sentences (default 20000 / 200)"},
         {"per_text", "sentences per text (default 50, text_specific 30)"},
         {"genres", "genre themes (default fairy,science)"},
         {"texts", "texts per genre or text_specific texts (default 40 / 10)"},
         {"genre_share", "themed share of genre texts (default 0.7)"},
         {"cycle", "comma-separated tokens of the cyclic pattern (default a,b,c)"},
         {"repeats", "cycles per sentence (default 4)"}}}},
      {"export-lmem",
       {kCommonKeys,
        {{"adaptive", "adaptive surprisal TSV (required)"},
         {"non_adaptive", "non-adaptive surprisal TSV (required)"},
         {"reading_times", "file with a reading_time header and one value per record"},
         {"include_unk", "keep <unk> tokens (default false)"}}}},
  };
  return m;
}

std::set<std::string> allowed_keys(const std::string& command) {
  std::set<std::string> out;
  for (const auto& group : command_keys().at(command)) {
    for (const auto& k : group) out.insert(k.name);
  }
  return out;
}

class RunContext {
 public:
  RunContext(std::string command, const RunConfig& config) : command_(std::move(command)), config_(config) {
    config_.check_known(allowed_keys(command_), command_);
    out_dir_ = config_.require("out_dir");
    seed_ = config_.get_u64("seed", 1);
    precision_ = config_.get("precision", "f32");
    if (precision_ != "f32" && precision_ != "f64") {
      fail(ErrorKind::usage, "precision must be f32 or f64, got '" + precision_ + "'");
    }
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    threads_ = config_.get_size("threads", hw);
    if (threads_ == 0) fail(ErrorKind::usage, "threads must be >= 1");
  }

  const RunConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  bool f64() const { return precision_ == "f64"; }
  std::size_t threads() const { return threads_; }

  // Registers an input file in run.json and returns its path.
  fs::path input(const std::string& key) {
    const fs::path p = config_.require(key);
    if (!fs::is_regular_file(p)) fail(ErrorKind::io, key + ": no such file " + p.string());
    inputs_[key] = p;
    return p;
  }
  std::optional<fs::path> optional_input(const std::string& key) {
    if (!config_.has(key)) return std::nullopt;
    return input(key);
  }

  fs::path out(const std::string& name) const { return out_dir_ / name; }
  void write(const std::string& name, std::string_view contents) const { write_text_file(out(name), contents); }

  void open_output() const {
    std::error_code ec;
    fs::create_directories(out_dir_, ec);
    if (ec || !fs::is_directory(out_dir_)) fail(ErrorKind::io, "cannot create output directory " + out_dir_.string());
  }

  void write_manifest() const {
    Json run;
    run["tool"] = kToolName;
    run["version"] = tool_version();
    run["command"] = command_;
    run["seed"] = seed_;
    run["precision"] = precision_;
    Json cfg = Json::object();
    for (const auto& [k, v] : config_.values()) {
      if (k != "out_dir") cfg[k] = v;
    }
    run["config"] = cfg;
    Json inputs = Json::object();
    for (const auto& [k, p] : inputs_) inputs[k] = {{"path", p.string()}, {"sha256", to_hex(file_fingerprint(p))}};
    run["inputs"] = inputs;
    write("run.json", dump(run));
    write("config.txt", config_.echo());
  }

 private:
  std::string command_;
  RunConfig config_;
  fs::path out_dir_;
  std::uint64_t seed_ = 1;
  std::string precision_;
  std::size_t threads_ = 1;
  std::map<std::string, fs::path> inputs_;
};

adaptation::AdaptationConfig adaptation_config(const RunContext& ctx, adaptation::StatePolicy default_state) {
  const auto& c = ctx.config();
  adaptation::AdaptationConfig a;
  const auto lr = c.get("lr", "");
  if (!lr.empty() && lr != "tune") a.learning_rate = c.get_double("lr", a.learning_rate);
  a.revert_policy = adaptation::revert_policy_from_string(c.get("revert", adaptation::to_string(a.revert_policy)));
  a.state_policy = adaptation::state_policy_from_string(c.get("state", adaptation::to_string(default_state)));
  a.update_with_dropout = c.get_bool("update_dropout", a.update_with_dropout);
  a.dropout_rate = c.get_double("update_dropout_rate", a.dropout_rate);
  a.clip_norm = c.get_optional_double("adapt_clip", a.clip_norm);
  a.loss_reduction = lm::loss_reduction_from_string(c.get("loss", lm::to_string(a.loss_reduction)));
  a.seed = corpus::derive_seed(ctx.seed(), 7);
  a.validate();
  return a;
}

template <typename Real>
struct LoadedModel {
  corpus::Vocabulary vocab;
  adaptation::Snapshot<Real> base;
};

template <typename Real>
LoadedModel<Real> load_model(RunContext& ctx) {
  auto vocab = corpus::Vocabulary::load(ctx.input("vocab"));
  auto ck = lm::load_checkpoint<Real>(ctx.input("checkpoint"), vocab.fingerprint());
  if (ck.params.vocab_size != vocab.size()) {
    fail(ErrorKind::format, "checkpoint vocabulary size " + std::to_string(ck.params.vocab_size) +
                                " differs from vocabulary file size " + std::to_string(vocab.size()));
  }
  adaptation::Snapshot<Real> base("base", std::move(ck.params), vocab.fingerprint());
  return {std::move(vocab), std::move(base)};
}

std::vector<corpus::Words> filler_pool(RunContext& ctx) {
  const auto path = ctx.optional_input("filler_corpus");
  if (!path) return {};
  return corpus::read_corpus(*path).all_sentences();
}

std::string bool_cell(bool b) { return b ? "1" : "0"; }

// ---- train ----------------------------------------------------------------

template <typename Real>
int run_train(RunContext& ctx) {
  const auto& c = ctx.config();
  const auto corpus = corpus::read_corpus(ctx.input("corpus"));
  std::vector<corpus::Words> train_words = corpus.all_sentences();
  std::vector<corpus::Words> valid_words;
  if (const auto vpath = ctx.optional_input("valid_corpus")) {
    valid_words = corpus::read_corpus(*vpath).all_sentences();
  } else {
    const double fraction = c.get_double("valid_fraction", 0.1);
    if (!(fraction >= 0.0 && fraction < 1.0)) fail(ErrorKind::usage, "valid_fraction must be in [0, 1)");
    const auto n_valid = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(train_words.size())));
    valid_words.assign(train_words.end() - static_cast<std::ptrdiff_t>(n_valid), train_words.end());
    train_words.resize(train_words.size() - n_valid);
  }
  if (train_words.empty()) fail(ErrorKind::data_invariant, "training corpus has no sentences");

  lm::HyperParams h;
  h.num_layers = c.get_size("layers", h.num_layers);
  h.hidden_size = c.get_size("hidden", h.hidden_size);
  h.embed_size = c.get_size("embed", h.embed_size);
  h.dropout_rate = c.get_double("dropout", h.dropout_rate);
  h.clip_norm = c.get_optional_double("clip_norm", h.clip_norm);
  h.base_learning_rate = c.get_double("lr", h.base_learning_rate);
  h.seed = ctx.seed();
  h.loss_reduction = lm::loss_reduction_from_string(c.get("loss", lm::to_string(h.loss_reduction)));
  h.validate();
  lm::TrainOptions opt;
  opt.epochs = c.get_size("epochs", opt.epochs);
  opt.early_stop_patience = c.get_size("patience", opt.early_stop_patience);
  opt.batch_size = c.get_size("batch_size", opt.batch_size);
  opt.lr_decay = c.get_double("lr_decay", opt.lr_decay);
  if (!(opt.lr_decay >= 1.0)) fail(ErrorKind::usage, "lr_decay must be >= 1");

  const auto vocab = corpus::Vocabulary::build(train_words, c.get_size("min_count", 1));
  ctx.open_output();
  const auto result = lm::train_base_model<Real>(vocab.encode_all(train_words), vocab.encode_all(valid_words),
                                                 vocab.size(), h, opt);

  std::ostringstream log;
  log << "epoch\tlearning_rate\ttrain_perplexity\tvalid_perplexity\tbest_valid_perplexity\timproved\n";
  double best = result.log.initial_valid_perplexity;
  for (const auto& e : result.log.epochs) {
    log << tsv_row({std::to_string(e.epoch), format_number(e.learning_rate), format_number(e.train_perplexity),
                    format_number(e.valid_perplexity), format_number(e.best_valid_perplexity),
                    bool_cell(e.improved)});
    best = e.best_valid_perplexity;
  }
  lm::Checkpoint<Real> ck;
  ck.hyper = h;
  ck.vocab_fingerprint = vocab.fingerprint();
  ck.metadata.epochs = static_cast<std::uint32_t>(result.log.epochs.size());
  ck.metadata.final_loss = std::log(best);
  ck.params = result.params;
  lm::save_checkpoint(ck, ctx.out("model.ckpt"));
  vocab.save(ctx.out("vocab.txt"));
  ctx.write("train_log.tsv", log.str());

  Json summary;
  summary["vocab_size"] = vocab.size();
  summary["sentences"] = {{"train", train_words.size()}, {"valid", valid_words.size()}};
  summary["vocab_sha256"] = to_hex(vocab.fingerprint());
  summary["checkpoint_sha256"] = to_hex(file_fingerprint(ctx.out("model.ckpt")));
  summary["final_valid_perplexity"] = number(best);
  summary["log"] = to_json(result.log);
  ctx.write("train.json", dump(summary));
  ctx.write_manifest();
  return kExitOk;
}

// ---- adapt-eval -----------------------------------------------------------

std::string phases_tsv(std::initializer_list<const adaptation::ProtocolReport*> reports) {
  std::ostringstream out;
  out << "protocol\tphase\tperplexity\ttokens\tdiverged\n";
  for (const auto* r : reports) {
    for (const auto& p : r->phases) {
      out << tsv_row({r->protocol, p.label, format_number(p.perplexity), std::to_string(p.tokens), bool_cell(p.diverged)});
    }
  }
  return out.str();
}

template <typename Real>
int run_adapt_eval(RunContext& ctx) {
  const auto& c = ctx.config();
  auto model = load_model<Real>(ctx);
  auto texts = encode_texts(corpus::read_corpus(ctx.input("corpus")), model.vocab);
  auto cfg = adaptation_config(ctx, adaptation::StatePolicy::carry_within_text);

  std::optional<std::string> tuned_on;
  if (c.get("lr", "") == "tune") {
    const auto id = c.get("tune_text", texts.empty() ? std::string() : texts.front().id);
    const auto it = std::find_if(texts.begin(), texts.end(), [&](const auto& t) { return t.id == id; });
    if (it == texts.end()) fail(ErrorKind::usage, "tune_text '" + id + "' is not a text of the corpus");
    const auto grid = c.get_doubles("tune_grid", adaptation::kDefaultLearningRateGrid);
    cfg.learning_rate = adaptation::tune_learning_rate(model.base, *it, grid, cfg);
    tuned_on = id;
    texts.erase(it);
  } else if (c.has("tune_text") || c.has("tune_grid")) {
    fail(ErrorKind::usage, "tune_text and tune_grid need lr=tune");
  }
  if (texts.empty()) fail(ErrorKind::data_invariant, "no texts left to evaluate");

  ctx.open_output();
  auto inc = adaptation::incremental_eval_texts(model.base, texts, cfg, model.vocab, ctx.threads());
  auto gen = adaptation::genre_protocol(model.base, texts, cfg, model.vocab, ctx.threads());
  inc.seed = gen.seed = ctx.seed();

  std::ostringstream cmp;
  cmp << "scope\tadaptive\tnon_adaptive\ttokens\treduction\n";
  for (const std::string scope : {"all", "later"}) {
    const std::string suffix = scope == "all" ? "" : "/later";
    const auto& a = inc.phase("adaptive" + suffix);
    const auto& n = inc.phase("non_adaptive" + suffix);
    cmp << tsv_row({scope, format_number(a.perplexity), format_number(n.perplexity), std::to_string(a.tokens),
                    format_number(1.0 - a.perplexity / n.perplexity)});
  }
  ctx.write("comparison.tsv", cmp.str());
  ctx.write("phases.tsv", phases_tsv({&inc, &gen}));
  for (const auto& [name, records] : inc.streams) ctx.write("surprisal_" + name + ".tsv", analysis::format_records_tsv(records));
  for (const auto& [name, records] : gen.streams) {
    ctx.write("surprisal_genre_" + name + ".tsv", analysis::format_records_tsv(records));
  }
  Json report;
  report["learning_rate"] = cfg.learning_rate;
  report["tuned_on"] = tuned_on ? Json(*tuned_on) : Json(nullptr);
  report["incremental"] = to_json(inc);
  report["genre"] = to_json(gen);
  ctx.write("report.json", dump(report));
  ctx.write_manifest();
  return inc.diverged || gen.diverged ? kExitDiverged : kExitOk;
}

// ---- gardenpath -----------------------------------------------------------

Json trend_json(const std::string& series, const analysis::RegressionResult& r) {
  return {{"series", series},
          {"slope", number(r.coefficient("item_order"))},
          {"t_value", number(r.t_value("item_order"))},
          {"fit", to_json(r)}};
}

template <typename Real>
int run_gardenpath(RunContext& ctx) {
  const auto& c = ctx.config();
  auto model = load_model<Real>(ctx);
  const auto cfg = adaptation_config(ctx, adaptation::StatePolicy::reset_each_sentence);
  std::vector<corpus::StimulusList> lists;
  if (const auto path = ctx.optional_input("lists")) {
    if (c.has("n_pairs") || c.has("n_fillers") || c.has("filler_corpus")) {
      fail(ErrorKind::usage, "n_pairs, n_fillers and filler_corpus only apply when lists are generated");
    }
    lists = corpus::parse_stimulus_lists_tsv(read_text_file(*path));
  } else {
    lists = garden_path_materials(c.get_size("n_pairs", 40), c.get_size("n_fillers", 80), ctx.seed(), filler_pool(ctx))
                .lists;
  }
  ctx.open_output();
  const auto s = run_garden_path(model.base, model.vocab, lists, cfg, ctx.threads());

  std::ostringstream trials;
  trials << "list_id\ttrial_index\titem_order\tpair_id\tpresented\tambiguous_region\tunambiguous_region\tpenalty\t"
            "presented_region\n";
  for (const auto& t : s.run.trials) {
    trials << tsv_row({std::to_string(t.list_id), std::to_string(t.trial_index), std::to_string(t.item_order),
                       std::to_string(t.pair_id), corpus::to_string(t.presented), format_number(t.ambiguous_region),
                       format_number(t.unambiguous_region), format_number(t.penalty),
                       format_number(t.presented_region)});
  }
  ctx.write("lists.tsv", corpus::format_stimulus_lists_tsv(lists));
  ctx.write("trials.tsv", trials.str());
  ctx.write("surprisal.tsv", analysis::format_records_tsv(s.run.records));
  ctx.write("plot.csv", analysis::format_plot_csv(s.plot));
  Json trends;
  trends["lists"] = lists.size();
  trends["critical_trials"] = s.run.trials.size();
  trends["diverged"] = s.run.diverged;
  trends["ambiguous"] = trend_json("penalty ~ item_order", s.trends.ambiguous);
  trends["unambiguous"] = trend_json("presented unambiguous region mean ~ item_order", s.trends.unambiguous);
  ctx.write("trends.json", dump(trends));
  ctx.write_manifest();
  return s.run.diverged ? kExitDiverged : kExitOk;
}

// ---- dative-sweep ---------------------------------------------------------

DativeSettings dative_settings(const RunConfig& c) {
  DativeSettings s;
  const auto dir = corpus::condition_from_string(c.get("direction", "DO"));
  if (dir != corpus::Condition::double_object && dir != corpus::Condition::prepositional_object) {
    fail(ErrorKind::usage, "direction must be DO or PO");
  }
  s.direction = dir;
  s.repetitions = c.get_size("repetitions", s.repetitions);
  s.n_pairs = c.get_size("n_pairs", s.n_pairs);
  s.n_adapt = c.get_size("n_adapt", s.n_adapt);
  s.n_new = c.get_size("n_new", s.n_new);
  s.n_fillers = c.get_size("n_fillers", s.n_fillers);
  s.grid = c.get_doubles("grid", s.grid);
  return s;
}

template <typename Real>
int run_dative(RunContext& ctx) {
  auto model = load_model<Real>(ctx);
  const auto settings = dative_settings(ctx.config());
  const auto cfg = adaptation_config(ctx, adaptation::StatePolicy::reset_each_sentence);
  const auto pool = filler_pool(ctx);
  ctx.open_output();
  const auto r = run_dative_sweep(model.base, model.vocab, settings, cfg, ctx.seed(), pool, ctx.threads());

  std::ostringstream cells, sweep;
  cells << "repetition\tlearning_rate\ttest_set\tperplexity\tdiverged\n";
  bool any_diverged = false;
  for (const auto& [rep, cell] : r.cells) {
    cells << tsv_row({std::to_string(rep), format_number(cell.learning_rate), cell.test_set,
                      format_number(cell.perplexity), bool_cell(cell.diverged)});
    any_diverged = any_diverged || cell.diverged;
  }
  sweep << "learning_rate\ttest_set\tmean\tsd\treduction\tdiverged_runs\n";
  std::vector<analysis::PlotPoint> plot;
  for (const auto& s : r.summary) {
    sweep << tsv_row({format_number(s.learning_rate), s.test_set, format_number(s.mean), format_number(s.sd),
                      format_number(s.reduction), std::to_string(s.diverged_runs)});
    plot.push_back({s.learning_rate, s.mean, s.test_set, corpus::to_string(settings.direction)});
  }
  ctx.write("cells.tsv", cells.str());
  ctx.write("sweep.tsv", sweep.str());
  ctx.write("plot.csv", analysis::format_plot_csv(plot));

  Json report;
  report["direction"] = corpus::to_string(settings.direction);
  report["repetitions"] = settings.repetitions;
  report["grid"] = settings.grid;
  report["best_learning_rate"] = r.best_learning_rate;
  report["any_diverged"] = any_diverged;
  auto reductions = [&](double lr) {
    Json j = Json::object();
    for (const auto* name : {kSharedLexicon, kSharedSyntax}) j[name] = number(summary_cell(r, lr, name).reduction);
    return j;
  };
  report["at_best"] = reductions(r.best_learning_rate);
  const double ten_x = r.best_learning_rate * 10.0;
  const auto hit = std::find_if(settings.grid.begin(), settings.grid.end(),
                                [&](double g) { return std::abs(g - ten_x) <= 1e-9 * ten_x; });
  report["at_10x_best"] = hit == settings.grid.end() ? Json(nullptr) : reductions(*hit);
  ctx.write("sweep.json", dump(report));
  ctx.write_manifest();
  return kExitOk;
}

// ---- forgetting -----------------------------------------------------------

template <typename Real>
int run_forgetting(RunContext& ctx) {
  const auto& c = ctx.config();
  auto model = load_model<Real>(ctx);
  const auto corpus = corpus::read_corpus(ctx.input("corpus"));
  const auto cfg = adaptation_config(ctx, adaptation::StatePolicy::reset_each_sentence);
  const auto splits = forgetting_splits(corpus, model.vocab, c.get_size("n_adapt", 1000),
                                        c.get_size("n_heldout", 1000), ctx.seed(), c.get_strings("genres", {}));
  if (splits.size() < 2) fail(ErrorKind::data_invariant, "forgetting needs at least two genres");
  ctx.open_output();
  const auto s = adaptation::forgetting_over_genres(model.base, splits, cfg, c.get_bool("controls", false), ctx.threads());

  std::ostringstream table;
  table << "g1\tg2\ta\tb\tc\tdiverged\tcontrol\n";
  std::vector<analysis::PlotPoint> plot;
  bool diverged = false;
  auto emit = [&](const adaptation::ForgettingResult& r, bool control) {
    table << tsv_row({r.g1, r.g2, format_number(r.a), format_number(r.b), format_number(r.c), bool_cell(r.diverged),
                      bool_cell(control)});
    diverged = diverged || r.diverged;
    const std::string series = r.g1 + ">" + r.g2;
    plot.push_back({0, r.a, "a", series});
    plot.push_back({1, r.b, "b", series});
    plot.push_back({2, r.c, "c", series});
  };
  for (const auto& r : s.pairs) emit(r, false);
  for (const auto& r : s.controls) emit(r, true);
  plot.push_back({0, s.mean_a, "a", "mean"});
  plot.push_back({1, s.mean_b, "b", "mean"});
  plot.push_back({2, s.mean_c, "c", "mean"});
  ctx.write("forgetting.tsv", table.str());
  ctx.write("plot.csv", analysis::format_plot_csv(plot));
  Json report;
  report["learning_rate"] = cfg.learning_rate;
  report["pairs"] = s.pairs.size();
  report["mean"] = {{"a", number(s.mean_a)}, {"b", number(s.mean_b)}, {"c", number(s.mean_c)}};
  ctx.write("forgetting.json", dump(report));
  ctx.write_manifest();
  return diverged ? kExitDiverged : kExitOk;
}

// ---- gen-stimuli ----------------------------------------------------------

std::string items_tsv(const std::vector<corpus::StimulusItem>& items) {
  std::ostringstream out;
  out << "pair_id\tcondition\tregion_start\tregion_len\ttokens\n";
  for (const auto& it : items) {
    out << tsv_row({std::to_string(it.pair_id), corpus::to_string(it.condition), std::to_string(it.region_start),
                    std::to_string(it.region_len), corpus::join(it.tokens)});
  }
  return out.str();
}

int run_gen_stimuli(RunContext& ctx) {
  const auto& c = ctx.config();
  const auto kind = c.require("kind");
  std::set<std::string> allowed{"out_dir", "seed", "precision", "threads", "kind"};
  auto allow = [&](std::initializer_list<const char*> keys) { allowed.insert(keys.begin(), keys.end()); };
  std::map<std::string, std::string> files;
  if (kind == "gardenpath") {
    allow({"n_pairs", "n_fillers", "filler_corpus"});
    c.check_known(allowed, "gen-stimuli kind=gardenpath");
    const auto m = garden_path_materials(c.get_size("n_pairs", 40), c.get_size("n_fillers", 80), ctx.seed(),
                                         filler_pool(ctx));
    files["items.tsv"] = items_tsv(m.items);
    files["lists.tsv"] = corpus::format_stimulus_lists_tsv(m.lists);
  } else if (kind == "dative") {
    allow({"n_pairs", "n_fillers", "filler_corpus", "direction", "n_adapt", "n_new"});
    c.check_known(allowed, "gen-stimuli kind=dative");
    auto settings = dative_settings(c);
    const auto pool = filler_pool(ctx);
    // The materials of the sweep's first repetition.
    const auto rep_seed = dative_repetition_seed(ctx.seed(), 0);
    const auto pairs = dative_pairs(settings, rep_seed);
    const auto m = dative_materials(settings, rep_seed, pool);
    std::ostringstream sets;
    sets << "set\tindex\ttokens\n";
    auto emit = [&sets](const std::string& name, const std::vector<corpus::Words>& v) {
      for (std::size_t i = 0; i < v.size(); ++i) sets << tsv_row({name, std::to_string(i), corpus::join(v[i])});
    };
    emit("adaptation_stream", m.adaptation_stream);
    emit(kSharedLexicon, m.shared_lexicon_test);
    emit(kSharedSyntax, m.shared_syntax_test);
    files["items.tsv"] = items_tsv(pairs);
    files["sets.tsv"] = sets.str();
  } else {
    corpus::Corpus out;
    if (kind == "background") {
      allow({"sentences", "per_text"});
      c.check_known(allowed, "gen-stimuli kind=background");
      out = corpus::background_corpus(c.get_size("sentences", 20000), ctx.seed(), c.get_size("per_text", 50));
    } else if (kind == "genres") {
      allow({"genres", "texts", "per_text", "genre_share"});
      c.check_known(allowed, "gen-stimuli kind=genres");
      out = corpus::genre_corpus(c.get_strings("genres", {"fairy", "science"}), c.get_size("texts", 40),
                                 c.get_size("per_text", 50), c.get_double("genre_share", 0.7), ctx.seed());
    } else if (kind == "text_specific") {
      allow({"texts", "per_text"});
      c.check_known(allowed, "gen-stimuli kind=text_specific");
      out = corpus::text_specific_corpus(c.get_size("texts", 10), c.get_size("per_text", 30), ctx.seed());
    } else if (kind == "cyclic") {
      allow({"cycle", "repeats", "sentences"});
      c.check_known(allowed, "gen-stimuli kind=cyclic");
      out = corpus::cyclic_corpus(c.get_strings("cycle", {"a", "b", "c"}), c.get_size("repeats", 4),
                                  c.get_size("sentences", 200));
    } else {
      fail(ErrorKind::usage, "unknown stimulus kind '" + kind +
                                 "' (expected gardenpath, dative, background, genres, text_specific or cyclic)");
    }
    files["corpus.txt"] = corpus::format_corpus(out);
  }
  ctx.open_output();
  for (const auto& [name, contents] : files) ctx.write(name, contents);
  ctx.write_manifest();
  return kExitOk;
}

// ---- export-lmem ----------------------------------------------------------

std::vector<double> read_reading_times(const fs::path& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line) || line != "reading_time") {
    fail(ErrorKind::format, path.string() + ": expected a 'reading_time' header");
  }
  std::vector<double> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(line, &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used == 0 || used != line.size() || !std::isfinite(v)) {
      fail(ErrorKind::format, path.string() + " line " + std::to_string(lineno) + ": not a finite number");
    }
    out.push_back(v);
  }
  return out;
}

int run_export_lmem(RunContext& ctx) {
  const auto adaptive = analysis::parse_records_tsv(read_text_file(ctx.input("adaptive")));
  const auto non_adaptive = analysis::parse_records_tsv(read_text_file(ctx.input("non_adaptive")));
  std::vector<double> rts;
  if (const auto p = ctx.optional_input("reading_times")) rts = read_reading_times(*p);
  const auto table = analysis::build_lmem_table(adaptive, non_adaptive, rts, ctx.config().get_bool("include_unk", false));
  if (table.rows.size() < 6) fail(ErrorKind::data_invariant, "too few rows for the fixed-effects fit");
  const auto fit = analysis::lmem_fixed_effects_proxy(table);
  ctx.open_output();
  ctx.write("lmem.tsv", analysis::format_lmem_tsv(table));
  Json proxy;
  proxy["rows"] = table.rows.size();
  proxy["dropped_unk"] = table.dropped_unk;
  proxy["response"] = rts.empty() ? "adaptive_surprisal" : "reading_time";
  proxy["fit"] = to_json(fit);
  ctx.write("proxy.json", dump(proxy));
  ctx.write_manifest();
  return kExitOk;
}

template <template <typename> class Fn>
int dispatch(RunContext& ctx) {
  return ctx.f64() ? Fn<double>::run(ctx) : Fn<float>::run(ctx);
}

template <typename R> struct TrainFn { static int run(RunContext& c) { return run_train<R>(c); } };
template <typename R> struct AdaptEvalFn { static int run(RunContext& c) { return run_adapt_eval<R>(c); } };
template <typename R> struct GardenPathFn { static int run(RunContext& c) { return run_gardenpath<R>(c); } };
template <typename R> struct DativeFn { static int run(RunContext& c) { return run_dative<R>(c); } };
template <typename R> struct ForgettingFn { static int run(RunContext& c) { return run_forgetting<R>(c); } };

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"train",      "adapt-eval",  "gardenpath", "dative-sweep",
                                              "forgetting", "gen-stimuli", "export-lmem"};
  return names;
}

int run_command(const std::string& command, const RunConfig& config) {
  if (!command_keys().contains(command)) fail(ErrorKind::usage, "unknown command '" + command + "'");
  RunContext ctx(command, config);
  if (command == "train") return dispatch<TrainFn>(ctx);
  if (command == "adapt-eval") return dispatch<AdaptEvalFn>(ctx);
  if (command == "gardenpath") return dispatch<GardenPathFn>(ctx);
  if (command == "dative-sweep") return dispatch<DativeFn>(ctx);
  if (command == "forgetting") return dispatch<ForgettingFn>(ctx);
  if (command == "gen-stimuli") return run_gen_stimuli(ctx);
  return run_export_lmem(ctx);
}

std::string command_help(const std::string& command) {
  if (!command_keys().contains(command)) fail(ErrorKind::usage, "unknown command '" + command + "'");
  std::ostringstream out;
  for (const auto& group : command_keys().at(command)) {
    for (const auto& k : group) out << "  " << k.name << std::string(k.name.size() < 20 ? 20 - k.name.size() : 1, ' ') << k.help << '\n';
  }
  return out.str();
}

}  // namespace adaptlm::app
