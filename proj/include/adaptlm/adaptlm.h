#ifndef ADAPTLM_ADAPTLM_H
#define ADAPTLM_ADAPTLM_H

#include <stddef.h>
#include <stdint.h>

#if defined(ADAPTLM_BUILDING_LIBRARY)
#define ALM_API __attribute__((visibility("default")))
#else
#define ALM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Values 1..3 double as process exit codes. */
typedef enum alm_status {
  ALM_OK = 0,
  ALM_ERR_USAGE = 1,
  ALM_ERR_DATA = 2,     /* data invariant, format or shape violation */
  ALM_ERR_DIVERGED = 3, /* outputs written, but adaptation lost finite weights */
  ALM_ERR_IO = 4,
  ALM_ERR_INTERNAL = 5
} alm_status;

typedef struct alm_config alm_config;
typedef struct alm_vocab alm_vocab;
typedef struct alm_model alm_model;

/* Message of the last failure on the calling thread; "" when none. Valid
   until the next call on that thread. */
ALM_API const char* alm_last_error(void);
ALM_API const char* alm_version(void);

/* ---- run configuration ---- */
ALM_API alm_status alm_config_new(alm_config** out);
ALM_API alm_status alm_config_load_file(alm_config* config, const char* path);
/* "key=value"; later assignments win. */
ALM_API alm_status alm_config_set(alm_config* config, const char* assignment);
ALM_API void alm_config_free(alm_config* config);

/* Runs a batch command ("train", "adapt-eval", "gardenpath", "dative-sweep",
   "forgetting", "gen-stimuli", "export-lmem"). */
ALM_API alm_status alm_run(const char* command, const alm_config* config);
/* Writes the accepted keys of `command` into buf (NUL-terminated, truncated to
   cap); *needed receives the full length when non-null. */
ALM_API alm_status alm_command_help(const char* command, char* buf, size_t cap, size_t* needed);

/* Checks every schema-bearing file of an output directory; *validated (when
   non-null) receives how many files were checked. */
ALM_API alm_status alm_validate_output_dir(const char* dir, size_t* validated);

/* ---- vocabulary ---- */
ALM_API alm_status alm_vocab_load(const char* path, alm_vocab** out);
ALM_API size_t alm_vocab_size(const alm_vocab* vocab);
/* Id of `token`, or the <unk> id (0). */
ALM_API int32_t alm_vocab_id(const alm_vocab* vocab, const char* token);
ALM_API void alm_vocab_free(alm_vocab* vocab);

/* ---- model ----
   A model owns base weights, working weights and a recurrent state. Scoring
   uses the working weights; revert copies the base weights back. */
typedef enum alm_precision { ALM_F32 = 0, ALM_F64 = 1 } alm_precision;

/* Fails with ALM_ERR_DATA when the checkpoint was trained with another
   vocabulary; the message names both fingerprints. */
ALM_API alm_status alm_model_load(const char* checkpoint_path, const alm_vocab* vocab, alm_precision precision,
                                  alm_model** out);
ALM_API alm_status alm_model_set_learning_rate(alm_model* model, double learning_rate);
/* Per-token surprisal (nats) of a whitespace-tokenized sentence, one value per
   word plus one for </s>; `surprisal` must hold n_words + 1 values. The
   state advances, the weights do not change. */
ALM_API alm_status alm_model_score(alm_model* model, const char* sentence, double* surprisal, size_t cap,
                                   size_t* count);
/* As alm_model_score, then one SGD step on the sentence. */
ALM_API alm_status alm_model_adapt(alm_model* model, const char* sentence, double* surprisal, size_t cap,
                                   size_t* count);
/* Zero recurrent state. */
ALM_API alm_status alm_model_begin_text(alm_model* model);
ALM_API alm_status alm_model_revert(alm_model* model);
/* Lowercase hex SHA-256 of the working weights into buf (65 bytes). */
ALM_API alm_status alm_model_fingerprint(const alm_model* model, char* buf, size_t cap);
ALM_API void alm_model_free(alm_model* model);

#ifdef __cplusplus
}
#endif

#endif
