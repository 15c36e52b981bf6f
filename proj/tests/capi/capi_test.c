/* Exercises the C interface the way an outside caller would. */
#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <sys/stat.h>

#include "soapseg/soapseg.h"

static int failures = 0;

#define EXPECT(cond)                                                  \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                     \
    }                                                                 \
  } while (0)

#define OK(call)                                                                               \
  do {                                                                                         \
    soapseg_status s_ = (call);                                                                \
    if (s_ != SOAPSEG_OK) {                                                                    \
      fprintf(stderr, "%s:%d: %s -> %s: %s\n", __FILE__, __LINE__, #call, soapseg_status_name(s_), \
              soapseg_last_error());                                                           \
      ++failures;                                                                              \
    }                                                                                          \
  } while (0)

static char path_buf[4096];

static const char* in_dir(const char* dir, const char* name) {
  snprintf(path_buf, sizeof path_buf, "%s/%s", dir, name);
  return path_buf;
}

int main(int argc, char** argv) {
  const char* dir = argc > 1 ? argv[1] : ".";
  mkdir(dir, 0755);

  EXPECT(strlen(soapseg_version()) > 0);
  EXPECT(strlen(soapseg_status_name(SOAPSEG_ERR_FORMAT)) > 0);

  /* argument errors */
  EXPECT(soapseg_corpus_read(NULL, NULL) == SOAPSEG_ERR_ARGUMENT);
  EXPECT(strlen(soapseg_last_error()) > 0);
  soapseg_corpus_free(NULL);
  soapseg_model_free(NULL);
  soapseg_string_free(NULL);

  /* generate a small corpus */
  char* config = NULL;
  OK(soapseg_generator_builtin("styleA", 4, &config));
  EXPECT(config != NULL && strstr(config, "header") != NULL);
  soapseg_corpus *raw = NULL, *gold = NULL;
  OK(soapseg_generate(config, 30, &raw, &gold));
  soapseg_string_free(config);
  size_t n = 0;
  int labeled = -1;
  OK(soapseg_corpus_size(raw, &n));
  EXPECT(n == 30);
  OK(soapseg_corpus_is_labeled(raw, &labeled));
  EXPECT(labeled == 0);
  OK(soapseg_corpus_is_labeled(gold, &labeled));
  EXPECT(labeled == 1);
  EXPECT(soapseg_generator_builtin("styleZ", 1, &config) == SOAPSEG_ERR_CONFIG);

  /* corpus round trip */
  char* jsonl = NULL;
  OK(soapseg_corpus_to_jsonl(raw, &jsonl));
  soapseg_corpus* reparsed = NULL;
  OK(soapseg_corpus_parse(jsonl, &reparsed));
  char* again = NULL;
  OK(soapseg_corpus_to_jsonl(reparsed, &again));
  EXPECT(jsonl && again && strcmp(jsonl, again) == 0);
  soapseg_string_free(jsonl);
  soapseg_string_free(again);
  soapseg_corpus_free(reparsed);
  EXPECT(soapseg_corpus_parse("{\"id\": 1}\n", &reparsed) != SOAPSEG_OK);
  EXPECT(strstr(soapseg_last_error(), "line 1") != NULL);
  OK(soapseg_corpus_write(gold, in_dir(dir, "gold.jsonl")));
  soapseg_corpus* read_back = NULL;
  OK(soapseg_corpus_read(in_dir(dir, "gold.jsonl"), &read_back));
  OK(soapseg_corpus_size(read_back, &n));
  EXPECT(n == 30);
  soapseg_corpus_free(read_back);
  EXPECT(soapseg_corpus_read(in_dir(dir, "missing.jsonl"), &read_back) == SOAPSEG_ERR_IO);

  /* lexicon and weak labels */
  soapseg_lexicon* lexicon = NULL;
  OK(soapseg_lexicon_default(&lexicon));
  const char* label = NULL;
  OK(soapseg_lexicon_lookup(lexicon, "Subjective", &label));
  EXPECT(label && strcmp(label, "S") == 0);
  OK(soapseg_lexicon_lookup(lexicon, "no such header", &label));
  EXPECT(label == NULL);
  char* pre = NULL;
  OK(soapseg_preprocess(raw, lexicon, &pre));
  EXPECT(pre && strstr(pre, "paragraphs") != NULL);
  soapseg_string_free(pre);
  soapseg_corpus* weak = NULL;
  char* report = NULL;
  OK(soapseg_weaklabel(raw, lexicon, &weak, &report));
  EXPECT(report && strstr(report, "30/30 retained") != NULL);
  soapseg_string_free(report);

  /* vectors */
  soapseg_provider* hashed = NULL;
  OK(soapseg_provider_hashed(64, &hashed));
  int dim = 0;
  OK(soapseg_provider_dim(hashed, &dim));
  EXPECT(dim == 64);
  EXPECT(soapseg_provider_hashed(63, &hashed) == SOAPSEG_ERR_CONFIG);
  OK(soapseg_vectorize(gold, hashed, in_dir(dir, "gold.vec")));
  uint64_t count = 0;
  OK(soapseg_embeddings_info(in_dir(dir, "gold.vec"), &dim, &count));
  EXPECT(dim == 64 && count > 30);
  soapseg_provider* file = NULL;
  OK(soapseg_provider_file(in_dir(dir, "gold.vec"), &file));

  /* train, predict, evaluate */
  soapseg_model* model = NULL;
  char* log = NULL;
  const char* hyper = "{\"layers\": 1, \"hidden\": 16, \"max_epochs\": 3, \"batch_size\": 8}";
  OK(soapseg_train(weak, NULL, hashed, "standard", hyper, NULL, &model, &log));
  EXPECT(log && strstr(log, "best_epoch") != NULL);
  soapseg_string_free(log);
  int in = 0, k = 0, layers = 0, hidden = 0;
  OK(soapseg_model_shape(model, &in, &k, &layers, &hidden));
  EXPECT(in == 64 && k == 5 && layers == 1 && hidden == 16);

  soapseg_corpus *pred_hashed = NULL, *pred_file = NULL;
  OK(soapseg_predict(model, gold, hashed, &pred_hashed));
  OK(soapseg_predict(model, gold, file, &pred_file));
  double f1_hashed = -1, f1_file = -1;
  char* table = NULL;
  OK(soapseg_evaluate(pred_hashed, gold, "standard", &f1_hashed, &table, NULL));
  OK(soapseg_evaluate(pred_file, gold, "standard", &f1_file, NULL, NULL));
  EXPECT(f1_hashed >= 0 && f1_hashed <= 1);
  /* float32 vectors from the file reproduce the hashed ones */
  EXPECT(fabs(f1_hashed - f1_file) < 1e-12);
  EXPECT(table && strstr(table, "Macro Avg.") != NULL);
  soapseg_string_free(table);

  /* checkpoints and transfer */
  OK(soapseg_model_save(model, in_dir(dir, "model.soaptag")));
  soapseg_model* loaded = NULL;
  OK(soapseg_model_load(in_dir(dir, "model.soaptag"), &loaded));
  soapseg_corpus* pred_loaded = NULL;
  OK(soapseg_predict(loaded, gold, hashed, &pred_loaded));
  char *a = NULL, *b = NULL;
  OK(soapseg_corpus_to_jsonl(pred_hashed, &a));
  OK(soapseg_corpus_to_jsonl(pred_loaded, &b));
  EXPECT(a && b && strcmp(a, b) == 0);
  soapseg_string_free(a);
  soapseg_string_free(b);

  soapseg_model* merged = NULL;
  OK(soapseg_transfer_init(model, "merged", &merged));
  OK(soapseg_model_shape(merged, &in, &k, &layers, &hidden));
  EXPECT(k == 4);
  soapseg_model* wrong = NULL;
  EXPECT(soapseg_train(weak, NULL, hashed, "standard", hyper, merged, &wrong, NULL) == SOAPSEG_ERR_DIMENSION);
  EXPECT(soapseg_model_load(in_dir(dir, "gold.vec"), &wrong) == SOAPSEG_ERR_FORMAT);
  soapseg_provider* small = NULL;
  OK(soapseg_provider_hashed(32, &small));
  soapseg_corpus* mismatched = NULL;
  EXPECT(soapseg_predict(model, gold, small, &mismatched) == SOAPSEG_ERR_DIMENSION);
  EXPECT(mismatched == NULL);
  soapseg_provider_free(small);

  /* experiment */
  const char* experiment =
      "{\"protocol\": \"weak_train\", \"dim\": 64,"
      " \"hyperparams\": {\"layers\": 1, \"hidden\": 8, \"max_epochs\": 2},"
      " \"source\": {\"name\": \"a\", \"generator\": {\"builtin\": \"styleA\", \"seed\": 3}, \"count\": 20},"
      " \"seeds\": [1]}";
  char *record = NULL, *text = NULL;
  OK(soapseg_run_experiment(experiment, NULL, NULL, in_dir(dir, "experiment"), &record, &text));
  EXPECT(record && strstr(record, "config_hash") != NULL);
  EXPECT(text && strstr(text, "Macro-F1") != NULL);
  soapseg_string_free(record);
  soapseg_string_free(text);
  struct stat st;
  EXPECT(stat(in_dir(dir, "experiment/record.json"), &st) == 0);
  EXPECT(soapseg_run_experiment("{\"protocol\": 3}", NULL, NULL, NULL, NULL, NULL) == SOAPSEG_ERR_CONFIG);

  soapseg_model_free(merged);
  soapseg_model_free(loaded);
  soapseg_model_free(model);
  soapseg_corpus_free(pred_loaded);
  soapseg_corpus_free(pred_hashed);
  soapseg_corpus_free(pred_file);
  soapseg_provider_free(file);
  soapseg_provider_free(hashed);
  soapseg_corpus_free(weak);
  soapseg_lexicon_free(lexicon);
  soapseg_corpus_free(raw);
  soapseg_corpus_free(gold);

  if (failures) {
    fprintf(stderr, "%d C API check(s) failed\n", failures);
    return 1;
  }
  printf("C API checks passed\n");
  return 0;
}
