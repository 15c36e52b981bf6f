/* C interface to the soapseg library.
 *
 * Every function returns a soapseg_status. On failure the message for the
 * calling thread is available from soapseg_last_error() until the next call.
 * Strings returned through char** are owned by the caller and released with
 * soapseg_string_free(). Handles are released with their *_free function;
 * passing NULL to a *_free function is a no-op.
 */
#ifndef SOAPSEG_SOAPSEG_H
#define SOAPSEG_SOAPSEG_H

#include <stddef.h>
#include <stdint.h>

#if defined(SOAPSEG_BUILDING_LIBRARY)
#define SOAPSEG_API __attribute__((visibility("default")))
#else
#define SOAPSEG_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum soapseg_status {
  SOAPSEG_OK = 0,
  SOAPSEG_ERR_IO = 1,
  SOAPSEG_ERR_PARSE = 2,
  SOAPSEG_ERR_VALIDATION = 3,
  SOAPSEG_ERR_FORMAT = 4,
  SOAPSEG_ERR_CONTRACT = 5,
  SOAPSEG_ERR_CONFIG = 6,
  SOAPSEG_ERR_DIMENSION = 7,
  SOAPSEG_ERR_LOOKUP = 8,
  SOAPSEG_ERR_NUMERIC = 9,
  SOAPSEG_ERR_ARGUMENT = 10, /* NULL or otherwise unusable argument */
  SOAPSEG_ERR_INTERNAL = 11
} soapseg_status;

/* A list of raw notes or of labeled notes. */
typedef struct soapseg_corpus soapseg_corpus;
typedef struct soapseg_lexicon soapseg_lexicon;
typedef struct soapseg_provider soapseg_provider;
typedef struct soapseg_model soapseg_model;

SOAPSEG_API const char* soapseg_version(void);
SOAPSEG_API const char* soapseg_status_name(soapseg_status status);
SOAPSEG_API const char* soapseg_last_error(void);
SOAPSEG_API void soapseg_string_free(char* s);

/* ---- corpora ---- */

SOAPSEG_API soapseg_status soapseg_corpus_read(const char* path, soapseg_corpus** out);
SOAPSEG_API soapseg_status soapseg_corpus_parse(const char* jsonl, soapseg_corpus** out);
SOAPSEG_API soapseg_status soapseg_corpus_write(const soapseg_corpus* corpus, const char* path);
SOAPSEG_API soapseg_status soapseg_corpus_to_jsonl(const soapseg_corpus* corpus, char** out);
SOAPSEG_API soapseg_status soapseg_corpus_size(const soapseg_corpus* corpus, size_t* out);
/* 1 for labeled notes, 0 for raw notes. */
SOAPSEG_API soapseg_status soapseg_corpus_is_labeled(const soapseg_corpus* corpus, int* out);
SOAPSEG_API void soapseg_corpus_free(soapseg_corpus* corpus);

/* Built-in generator settings ("styleA" | "styleB") as JSON. */
SOAPSEG_API soapseg_status soapseg_generator_builtin(const char* style, uint64_t seed, char** config_json);
/* Generates n notes. Either output pointer may be NULL. */
SOAPSEG_API soapseg_status soapseg_generate(const char* config_json, size_t n, soapseg_corpus** raw,
                                            soapseg_corpus** gold);

/* ---- preprocessing and weak labels ---- */

SOAPSEG_API soapseg_status soapseg_lexicon_default(soapseg_lexicon** out);
SOAPSEG_API soapseg_status soapseg_lexicon_load(const char* path, soapseg_lexicon** out);
/* Label display name ("S", "O", "A", "P", "Out", "A&P") or NULL when unmapped. */
SOAPSEG_API soapseg_status soapseg_lexicon_lookup(const soapseg_lexicon* lexicon, const char* header,
                                                  const char** label);
SOAPSEG_API void soapseg_lexicon_free(soapseg_lexicon* lexicon);

/* JSONL, one object per note: id, explicitly_structured, paragraphs
 * (index, text, header, sentences). */
SOAPSEG_API soapseg_status soapseg_preprocess(const soapseg_corpus* corpus, const soapseg_lexicon* lexicon,
                                              char** jsonl);

/* Keeps explicitly structured notes and labels them. report may be NULL. */
SOAPSEG_API soapseg_status soapseg_weaklabel(const soapseg_corpus* corpus, const soapseg_lexicon* lexicon,
                                             soapseg_corpus** labeled, char** report);

/* ---- vectors ---- */

SOAPSEG_API soapseg_status soapseg_provider_hashed(int dim, soapseg_provider** out);
SOAPSEG_API soapseg_status soapseg_provider_file(const char* embeddings_path, soapseg_provider** out);
SOAPSEG_API soapseg_status soapseg_provider_dim(const soapseg_provider* provider, int* out);
SOAPSEG_API void soapseg_provider_free(soapseg_provider* provider);

/* Writes one record per paragraph ("note_id#index") as an EmbeddingFile. */
SOAPSEG_API soapseg_status soapseg_vectorize(const soapseg_corpus* corpus, const soapseg_provider* provider,
                                             const char* out_path);
SOAPSEG_API soapseg_status soapseg_embeddings_info(const char* path, int* dim, uint64_t* count);

/* ---- tagger ---- */

/* scheme: "standard" (5 labels) or "merged" (4 labels). hyperparams_json may be
 * NULL for defaults. init may be NULL for a random start seeded from the
 * hyperparameters; validation may be NULL (the last epoch is kept). log_json
 * may be NULL. */
SOAPSEG_API soapseg_status soapseg_train(const soapseg_corpus* train, const soapseg_corpus* validation,
                                         const soapseg_provider* provider, const char* scheme,
                                         const char* hyperparams_json, const soapseg_model* init,
                                         soapseg_model** out, char** log_json);
/* Labeled corpus with provenance "predicted". */
SOAPSEG_API soapseg_status soapseg_predict(const soapseg_model* model, const soapseg_corpus* corpus,
                                           const soapseg_provider* provider, soapseg_corpus** out);
/* Both corpora labeled, same note order. table and json may be NULL. */
SOAPSEG_API soapseg_status soapseg_evaluate(const soapseg_corpus* predicted, const soapseg_corpus* gold,
                                            const char* scheme, double* macro_f1, char** table, char** json);
/* Warm start for a target scheme (identity, or A/P merged into A&P). */
SOAPSEG_API soapseg_status soapseg_transfer_init(const soapseg_model* source, const char* target_scheme,
                                                 soapseg_model** out);
SOAPSEG_API soapseg_status soapseg_model_load(const char* path, soapseg_model** out);
SOAPSEG_API soapseg_status soapseg_model_save(const soapseg_model* model, const char* path);
SOAPSEG_API soapseg_status soapseg_model_shape(const soapseg_model* model, int* input_dim, int* num_labels,
                                               int* layers, int* hidden);
SOAPSEG_API void soapseg_model_free(soapseg_model* model);

/* ---- experiments ---- */

/* Relative paths inside the config resolve against base_dir (NULL: the
 * working directory). protocol overrides the config's protocol when not NULL
 * ("weak_train", "transfer", "ablation", "timing"); output_dir likewise.
 * Writes record.json and report.txt when an output directory is set.
 * record_json and report may be NULL. */
SOAPSEG_API soapseg_status soapseg_run_experiment(const char* config_json, const char* base_dir,
                                                  const char* protocol, const char* output_dir,
                                                  char** record_json, char** report);

#ifdef __cplusplus
}
#endif

#endif
