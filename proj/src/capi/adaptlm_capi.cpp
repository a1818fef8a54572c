#include "adaptlm/adaptlm.h"

#include <cstring>
#include <memory>
#include <new>
#include <string>
#include <variant>

#include "adaptation/adaptation.hpp"
#include "app/commands.hpp"
#include "app/run_config.hpp"
#include "app/schemas.hpp"
#include "corpus/tokenizer.hpp"
#include "corpus/vocabulary.hpp"
#include "error.hpp"
#include "lm/checkpoint.hpp"

struct alm_config {
  adaptlm::app::RunConfig config;
};

struct alm_vocab {
  adaptlm::corpus::Vocabulary vocab;
};

namespace {

template <typename Real>
struct TypedModel {
  adaptlm::adaptation::Snapshot<Real> base;
  adaptlm::adaptation::AdaptiveModel<Real> model;
};

thread_local std::string g_last_error;

alm_status status_for(adaptlm::ErrorKind kind) {
  using adaptlm::ErrorKind;
  switch (kind) {
    case ErrorKind::usage:
    case ErrorKind::invalid_argument:
      return ALM_ERR_USAGE;
    case ErrorKind::shape:
    case ErrorKind::data_invariant:
    case ErrorKind::format:
      return ALM_ERR_DATA;
    case ErrorKind::io:
      return ALM_ERR_IO;
    case ErrorKind::diverged:
      return ALM_ERR_DIVERGED;
  }
  return ALM_ERR_INTERNAL;
}

// Runs fn, translating exceptions into status codes and the thread-local
// message.
template <typename Fn>
alm_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    return fn();
  } catch (const adaptlm::Error& e) {
    g_last_error = e.what();
    return status_for(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown exception";
  }
  return ALM_ERR_INTERNAL;
}

alm_status null_argument(const char* name) {
  g_last_error = std::string("null argument: ") + name;
  return ALM_ERR_USAGE;
}

}  // namespace

struct alm_model {
  const adaptlm::corpus::Vocabulary* vocab = nullptr;
  std::variant<std::unique_ptr<TypedModel<float>>, std::unique_ptr<TypedModel<double>>> impl;
};

namespace {

alm_status run_sentence(alm_model* m, const char* sentence, double* out, size_t cap, size_t* count, bool adapt) {
  if (!m) return null_argument("model");
  if (!sentence) return null_argument("sentence");
  return guarded([&] {
    const auto ids = m->vocab->encode(adaptlm::corpus::tokenize_words(sentence));
    if (ids.empty()) adaptlm::fail(adaptlm::ErrorKind::invalid_argument, "empty sentence");
    if (count) *count = ids.size() + 1;
    if (!out || cap < ids.size() + 1) {
      adaptlm::fail(adaptlm::ErrorKind::invalid_argument,
                    "surprisal buffer holds " + std::to_string(cap) + " values, " + std::to_string(ids.size() + 1) +
                        " needed");
    }
    bool diverged = false;
    std::visit(
        [&](auto& typed) {
          std::vector<double> lps;
          if (adapt) {
            auto outcome = typed->model.adapt_on_sentence(ids);
            lps = std::move(outcome.target_log_probs);
            diverged = outcome.diverged;
          } else {
            lps = typed->model.score(ids);
          }
          for (std::size_t i = 0; i < lps.size(); ++i) out[i] = -lps[i];
        },
        m->impl);
    if (diverged) {
      g_last_error = "adaptation step produced non-finite weights";
      return ALM_ERR_DIVERGED;
    }
    return ALM_OK;
  });
}

}  // namespace

extern "C" {

const char* alm_last_error(void) { return g_last_error.c_str(); }

const char* alm_version(void) { return adaptlm::app::tool_version(); }

alm_status alm_config_new(alm_config** out) {
  if (!out) return null_argument("out");
  return guarded([&] {
    *out = new alm_config{};
    return ALM_OK;
  });
}

alm_status alm_config_load_file(alm_config* config, const char* path) {
  if (!config) return null_argument("config");
  if (!path) return null_argument("path");
  return guarded([&] {
    const auto loaded = adaptlm::app::RunConfig::from_file(path);
    for (const auto& [k, v] : loaded.values()) config->config.set(k, v);
    return ALM_OK;
  });
}

alm_status alm_config_set(alm_config* config, const char* assignment) {
  if (!config) return null_argument("config");
  if (!assignment) return null_argument("assignment");
  return guarded([&] {
    config->config.apply_override(assignment);
    return ALM_OK;
  });
}

void alm_config_free(alm_config* config) { delete config; }

alm_status alm_run(const char* command, const alm_config* config) {
  if (!command) return null_argument("command");
  if (!config) return null_argument("config");
  return guarded([&] {
    const int code = adaptlm::app::run_command(command, config->config);
    if (code == adaptlm::app::kExitDiverged) {
      g_last_error = "an adaptation run diverged; outputs were written";
      return ALM_ERR_DIVERGED;
    }
    return ALM_OK;
  });
}

alm_status alm_command_help(const char* command, char* buf, size_t cap, size_t* needed) {
  if (!command) return null_argument("command");
  return guarded([&] {
    const auto text = adaptlm::app::command_help(command);
    if (needed) *needed = text.size();
    if (buf && cap > 0) {
      const std::size_t n = std::min(cap - 1, text.size());
      std::memcpy(buf, text.data(), n);
      buf[n] = '\0';
    }
    return ALM_OK;
  });
}

alm_status alm_validate_output_dir(const char* dir, size_t* validated) {
  if (!dir) return null_argument("dir");
  return guarded([&] {
    const auto files = adaptlm::app::validate_output_dir(dir);
    if (validated) *validated = files.size();
    return ALM_OK;
  });
}

alm_status alm_vocab_load(const char* path, alm_vocab** out) {
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  return guarded([&] {
    *out = new alm_vocab{adaptlm::corpus::Vocabulary::load(path)};
    return ALM_OK;
  });
}

size_t alm_vocab_size(const alm_vocab* vocab) { return vocab ? vocab->vocab.size() : 0; }

int32_t alm_vocab_id(const alm_vocab* vocab, const char* token) {
  if (!vocab || !token) return 0;
  return static_cast<int32_t>(vocab->vocab.id(token));
}

void alm_vocab_free(alm_vocab* vocab) { delete vocab; }

alm_status alm_model_load(const char* checkpoint_path, const alm_vocab* vocab, alm_precision precision,
                          alm_model** out) {
  if (!checkpoint_path) return null_argument("checkpoint_path");
  if (!vocab) return null_argument("vocab");
  if (!out) return null_argument("out");
  if (precision != ALM_F32 && precision != ALM_F64) {
    g_last_error = "precision must be ALM_F32 or ALM_F64";
    return ALM_ERR_USAGE;
  }
  return guarded([&] {
    auto m = std::make_unique<alm_model>();
    m->vocab = &vocab->vocab;
    auto build = [&](auto tag) {
      using Real = decltype(tag);
      auto ck = adaptlm::lm::load_checkpoint<Real>(checkpoint_path, vocab->vocab.fingerprint());
      adaptlm::adaptation::Snapshot<Real> base("base", std::move(ck.params), vocab->vocab.fingerprint());
      adaptlm::adaptation::AdaptiveModel<Real> model(base, adaptlm::adaptation::AdaptationConfig{});
      return std::make_unique<TypedModel<Real>>(TypedModel<Real>{std::move(base), std::move(model)});
    };
    if (precision == ALM_F64) {
      m->impl = build(double{});
    } else {
      m->impl = build(float{});
    }
    *out = m.release();
    return ALM_OK;
  });
}

alm_status alm_model_set_learning_rate(alm_model* model, double learning_rate) {
  if (!model) return null_argument("model");
  return guarded([&] {
    std::visit([&](auto& t) { t->model.set_learning_rate(learning_rate); }, model->impl);
    return ALM_OK;
  });
}

alm_status alm_model_score(alm_model* model, const char* sentence, double* surprisal, size_t cap, size_t* count) {
  return run_sentence(model, sentence, surprisal, cap, count, false);
}

alm_status alm_model_adapt(alm_model* model, const char* sentence, double* surprisal, size_t cap, size_t* count) {
  return run_sentence(model, sentence, surprisal, cap, count, true);
}

alm_status alm_model_begin_text(alm_model* model) {
  if (!model) return null_argument("model");
  return guarded([&] {
    std::visit([](auto& t) { t->model.begin_text(); }, model->impl);
    return ALM_OK;
  });
}

alm_status alm_model_revert(alm_model* model) {
  if (!model) return null_argument("model");
  return guarded([&] {
    std::visit([](auto& t) { t->model.revert(t->base); }, model->impl);
    return ALM_OK;
  });
}

alm_status alm_model_fingerprint(const alm_model* model, char* buf, size_t cap) {
  if (!model) return null_argument("model");
  if (!buf || cap < 65) return null_argument("buf (needs 65 bytes)");
  return guarded([&] {
    const auto hex = std::visit(
        [](const auto& t) { return adaptlm::to_hex(adaptlm::adaptation::parameters_fingerprint(t->model.params())); },
        model->impl);
    std::memcpy(buf, hex.c_str(), hex.size() + 1);
    return ALM_OK;
  });
}

void alm_model_free(alm_model* model) { delete model; }

}  // extern "C"
