#include "soapseg/soapseg.h"

#include <cstring>
#include <memory>
#include <new>
#include <json.hpp>
#include <string>
#include <variant>

#include "soapseg/corpus.hpp"
#include "soapseg/harness.hpp"
#include "soapseg/metrics.hpp"
#include "soapseg/preprocess.hpp"
#include "soapseg/tagger.hpp"
#include "soapseg/vectorize.hpp"
#include "soapseg/weaklabel.hpp"

struct soapseg_corpus {
  soapseg::corpus::Corpus notes;
};
struct soapseg_lexicon {
  soapseg::preprocess::HeaderLexicon lexicon;
};
struct soapseg_provider {
  std::unique_ptr<soapseg::vectorize::Provider> provider;
};
struct soapseg_model {
  soapseg::tagger::TaggerModel model;
};

namespace {

using namespace soapseg;

thread_local std::string g_last_error;

struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

template <typename F>
soapseg_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return SOAPSEG_OK;
  } catch (const ArgumentError& e) {
    g_last_error = e.what();
    return SOAPSEG_ERR_ARGUMENT;
  } catch (const IoError& e) {
    g_last_error = e.what();
    return SOAPSEG_ERR_IO;
  } catch (const ParseError& e) {
    g_last_error = e.what();
    return SOAPSEG_ERR_PARSE;
  } catch (const ValidationError& e) {
    g_last_error = e.what();
    return SOAPSEG_ERR_VALIDATION;
  } catch (const FormatError& e) {
    g_last_error = e.what();
    return SOAPSEG_ERR_FORMAT;
  } catch (const ContractError& e) {
    g_last_error = e.what();
    return SOAPSEG_ERR_CONTRACT;
  } catch (const ConfigError& e) {
    g_last_error = e.what();
    return SOAPSEG_ERR_CONFIG;
  } catch (const DimensionError& e) {
    g_last_error = e.what();
    return SOAPSEG_ERR_DIMENSION;
  } catch (const LookupError& e) {
    g_last_error = e.what();
    return SOAPSEG_ERR_LOOKUP;
  } catch (const NumericError& e) {
    g_last_error = e.what();
    return SOAPSEG_ERR_NUMERIC;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SOAPSEG_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return SOAPSEG_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw ArgumentError(std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void set_string(char** out, const std::string& s) {
  if (out != nullptr) *out = dup_string(s);
}

const std::vector<RawNote>& raw_of(const soapseg_corpus* c, std::vector<RawNote>& storage) {
  if (const auto* raw = std::get_if<std::vector<RawNote>>(&c->notes)) return *raw;
  storage = corpus::raw_notes(std::get<std::vector<LabeledNote>>(c->notes));
  return storage;
}

const std::vector<LabeledNote>& labeled_of(const soapseg_corpus* c, const char* what) {
  const auto* labeled = std::get_if<std::vector<LabeledNote>>(&c->notes);
  if (labeled == nullptr) throw ContractError(std::string(what) + ": expected a labeled corpus");
  return *labeled;
}

LabelScheme scheme_named(const char* name) {
  const std::string s = name == nullptr ? "standard" : name;
  if (s == "standard") return LabelScheme::standard();
  if (s == "merged") return LabelScheme::merged();
  throw ConfigError("unknown label scheme '" + s + "' (expected standard|merged)");
}

}  // namespace

extern "C" {

const char* soapseg_version(void) { return "1.0.0"; }

const char* soapseg_status_name(soapseg_status status) {
  switch (status) {
    case SOAPSEG_OK: return "ok";
    case SOAPSEG_ERR_IO: return "io error";
    case SOAPSEG_ERR_PARSE: return "parse error";
    case SOAPSEG_ERR_VALIDATION: return "validation error";
    case SOAPSEG_ERR_FORMAT: return "format error";
    case SOAPSEG_ERR_CONTRACT: return "contract violation";
    case SOAPSEG_ERR_CONFIG: return "config error";
    case SOAPSEG_ERR_DIMENSION: return "dimension error";
    case SOAPSEG_ERR_LOOKUP: return "lookup error";
    case SOAPSEG_ERR_NUMERIC: return "numeric error";
    case SOAPSEG_ERR_ARGUMENT: return "invalid argument";
    case SOAPSEG_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* soapseg_last_error(void) { return g_last_error.c_str(); }

void soapseg_string_free(char* s) { std::free(s); }

// ---- corpora ----

soapseg_status soapseg_corpus_read(const char* path, soapseg_corpus** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new soapseg_corpus{corpus::read_corpus(path)};
  });
}

soapseg_status soapseg_corpus_parse(const char* jsonl, soapseg_corpus** out) {
  return guarded([&] {
    require(jsonl, "jsonl");
    require(out, "out");
    *out = new soapseg_corpus{corpus::parse_corpus(jsonl)};
  });
}

soapseg_status soapseg_corpus_write(const soapseg_corpus* c, const char* path) {
  return guarded([&] {
    require(c, "corpus");
    require(path, "path");
    std::visit([&](const auto& notes) { corpus::write_corpus(notes, path); }, c->notes);
  });
}

soapseg_status soapseg_corpus_to_jsonl(const soapseg_corpus* c, char** out) {
  return guarded([&] {
    require(c, "corpus");
    require(out, "out");
    *out = dup_string(std::visit([](const auto& notes) { return corpus::to_jsonl(notes); }, c->notes));
  });
}

soapseg_status soapseg_corpus_size(const soapseg_corpus* c, size_t* out) {
  return guarded([&] {
    require(c, "corpus");
    require(out, "out");
    *out = std::visit([](const auto& notes) { return notes.size(); }, c->notes);
  });
}

soapseg_status soapseg_corpus_is_labeled(const soapseg_corpus* c, int* out) {
  return guarded([&] {
    require(c, "corpus");
    require(out, "out");
    *out = std::holds_alternative<std::vector<LabeledNote>>(c->notes) ? 1 : 0;
  });
}

void soapseg_corpus_free(soapseg_corpus* c) { delete c; }

soapseg_status soapseg_generator_builtin(const char* style, uint64_t seed, char** config_json) {
  return guarded([&] {
    require(style, "style");
    require(config_json, "config_json");
    *config_json = dup_string(corpus::GeneratorConfig::builtin(style, seed).to_json());
  });
}

soapseg_status soapseg_generate(const char* config_json, size_t n, soapseg_corpus** raw, soapseg_corpus** gold) {
  return guarded([&] {
    require(config_json, "config_json");
    auto generated = corpus::generate_corpus(corpus::GeneratorConfig::from_json(config_json), n);
    std::unique_ptr<soapseg_corpus> r(raw ? new soapseg_corpus{std::move(generated.raw)} : nullptr);
    std::unique_ptr<soapseg_corpus> g(gold ? new soapseg_corpus{std::move(generated.gold)} : nullptr);
    if (raw) *raw = r.release();
    if (gold) *gold = g.release();
  });
}

// ---- preprocessing and weak labels ----

soapseg_status soapseg_lexicon_default(soapseg_lexicon** out) {
  return guarded([&] {
    require(out, "out");
    *out = new soapseg_lexicon{preprocess::HeaderLexicon::defaults()};
  });
}

soapseg_status soapseg_lexicon_load(const char* path, soapseg_lexicon** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new soapseg_lexicon{preprocess::HeaderLexicon::load(path)};
  });
}

soapseg_status soapseg_lexicon_lookup(const soapseg_lexicon* lexicon, const char* header, const char** label) {
  return guarded([&] {
    require(lexicon, "lexicon");
    require(header, "header");
    require(label, "label");
    const auto found = lexicon->lexicon.lookup(header);
    *label = found ? display_name(*found).data() : nullptr;
  });
}

void soapseg_lexicon_free(soapseg_lexicon* lexicon) { delete lexicon; }

soapseg_status soapseg_preprocess(const soapseg_corpus* c, const soapseg_lexicon* lexicon, char** jsonl) {
  return guarded([&] {
    require(c, "corpus");
    require(lexicon, "lexicon");
    require(jsonl, "jsonl");
    std::vector<RawNote> storage;
    std::string out;
    for (const RawNote& note : raw_of(c, storage)) {
      const auto paragraphs = preprocess::split_paragraphs(note);
      nlohmann::ordered_json obj;
      obj["id"] = note.id;
      obj["explicitly_structured"] = preprocess::is_explicitly_structured(paragraphs, lexicon->lexicon);
      nlohmann::ordered_json list = nlohmann::ordered_json::array();
      for (const Paragraph& p : paragraphs) {
        nlohmann::ordered_json entry;
        entry["index"] = p.index;
        entry["text"] = p.text;
        entry["header"] = p.header ? nlohmann::ordered_json(*p.header) : nlohmann::ordered_json(nullptr);
        entry["sentences"] = p.sentences;
        list.push_back(std::move(entry));
      }
      obj["paragraphs"] = std::move(list);
      out += obj.dump();
      out += '\n';
    }
    *jsonl = dup_string(out);
  });
}

soapseg_status soapseg_weaklabel(const soapseg_corpus* c, const soapseg_lexicon* lexicon, soapseg_corpus** labeled,
                                 char** report) {
  return guarded([&] {
    require(c, "corpus");
    require(lexicon, "lexicon");
    require(labeled, "labeled");
    std::vector<RawNote> storage;
    auto weak = weaklabel::build_weak_corpus(raw_of(c, storage), lexicon->lexicon);
    std::string text = weak.report.to_text();
    auto result = std::make_unique<soapseg_corpus>(soapseg_corpus{std::move(weak.notes)});
    set_string(report, text);
    *labeled = result.release();
  });
}

// ---- vectors ----

soapseg_status soapseg_provider_hashed(int dim, soapseg_provider** out) {
  return guarded([&] {
    require(out, "out");
    *out = new soapseg_provider{std::make_unique<vectorize::HashedProvider>(dim)};
  });
}

soapseg_status soapseg_provider_file(const char* path, soapseg_provider** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new soapseg_provider{vectorize::FileProvider::open(path)};
  });
}

soapseg_status soapseg_provider_dim(const soapseg_provider* provider, int* out) {
  return guarded([&] {
    require(provider, "provider");
    require(out, "out");
    *out = provider->provider->dim();
  });
}

void soapseg_provider_free(soapseg_provider* provider) { delete provider; }

soapseg_status soapseg_vectorize(const soapseg_corpus* c, const soapseg_provider* provider, const char* out_path) {
  return guarded([&] {
    require(c, "corpus");
    require(provider, "provider");
    require(out_path, "out_path");
    std::vector<vectorize::NoteMatrix> matrices;
    if (const auto* labeled = std::get_if<std::vector<LabeledNote>>(&c->notes)) {
      matrices = vectorize::vectorize_corpus(*labeled, *provider->provider);
    } else {
      for (const RawNote& note : std::get<std::vector<RawNote>>(c->notes)) {
        matrices.push_back(vectorize::vectorize_note(note.id, preprocess::split_paragraphs(note), *provider->provider));
      }
    }
    vectorize::EmbeddingTable table = vectorize::to_table(matrices);
    if (table.size() == 0) table = vectorize::EmbeddingTable(provider->provider->dim());
    vectorize::save_embeddings(table, out_path);
  });
}

soapseg_status soapseg_embeddings_info(const char* path, int* dim, uint64_t* count) {
  return guarded([&] {
    require(path, "path");
    const auto table = vectorize::load_embeddings(path);
    if (dim) *dim = table.dim();
    if (count) *count = table.size();
  });
}

// ---- tagger ----

soapseg_status soapseg_train(const soapseg_corpus* train, const soapseg_corpus* validation,
                             const soapseg_provider* provider, const char* scheme, const char* hyperparams_json,
                             const soapseg_model* init, soapseg_model** out, char** log_json) {
  return guarded([&] {
    require(train, "train");
    require(provider, "provider");
    require(out, "out");
    const LabelScheme label_scheme = scheme_named(scheme);
    const tagger::Hyperparams hyper =
        hyperparams_json ? tagger::Hyperparams::from_json(hyperparams_json) : tagger::Hyperparams{};
    const auto train_set = tagger::make_examples(labeled_of(train, "train"), *provider->provider, label_scheme);
    std::vector<tagger::Example> validation_set;
    if (validation) {
      validation_set = tagger::make_examples(labeled_of(validation, "validation"), *provider->provider, label_scheme);
    }
    tagger::TaggerModel start;
    if (init) {
      start = init->model;
      if (start.scheme().size() != label_scheme.size()) {
        throw DimensionError("initial model has " + std::to_string(start.shape.num_labels) + " labels, scheme " +
                             std::string(label_scheme.name()) + " has " + std::to_string(label_scheme.size()));
      }
    } else {
      start = tagger::TaggerModel::initialize(
          {provider->provider->dim(), static_cast<int>(label_scheme.size()), hyper.layers, hyper.hidden}, hyper.seed);
    }
    auto result = tagger::train(start, train_set, validation_set, hyper);
    std::string log = result.log_json();
    auto model = std::make_unique<soapseg_model>(soapseg_model{std::move(result.model)});
    set_string(log_json, log);
    *out = model.release();
  });
}

soapseg_status soapseg_predict(const soapseg_model* model, const soapseg_corpus* c, const soapseg_provider* provider,
                               soapseg_corpus** out) {
  return guarded([&] {
    require(model, "model");
    require(c, "corpus");
    require(provider, "provider");
    require(out, "out");
    std::vector<RawNote> storage;
    const auto& raw = raw_of(c, storage);
    std::vector<LabeledNote> notes;
    std::vector<tagger::Matrix> inputs;
    for (const RawNote& note : raw) {
      LabeledNote n;
      n.note = note;
      n.paragraphs = preprocess::split_paragraphs(note);
      n.provenance = Provenance::Predicted;
      if (!n.paragraphs.empty()) {
        inputs.push_back(tagger::to_matrix(vectorize::vectorize_note(note.id, n.paragraphs, *provider->provider)));
      }
      notes.push_back(std::move(n));
    }
    const auto predicted = tagger::predict_labels(model->model, inputs);
    std::size_t k = 0;
    for (auto& n : notes) {
      if (!n.paragraphs.empty()) n.labels = predicted[k++];
    }
    *out = new soapseg_corpus{std::move(notes)};
  });
}

soapseg_status soapseg_evaluate(const soapseg_corpus* predicted, const soapseg_corpus* gold, const char* scheme,
                                double* macro_f1, char** table, char** json) {
  return guarded([&] {
    require(predicted, "predicted");
    require(gold, "gold");
    const auto& p = labeled_of(predicted, "predicted");
    const auto& g = labeled_of(gold, "gold");
    if (p.size() != g.size()) {
      throw ContractError("evaluate: " + std::to_string(p.size()) + " predicted notes for " + std::to_string(g.size()) +
                          " gold notes");
    }
    std::vector<metrics::LabelSequence> pred, ref;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i].note.id != g[i].note.id) {
        throw ContractError("evaluate: note " + std::to_string(i) + " is '" + p[i].note.id + "' in the predictions but '" +
                            g[i].note.id + "' in the gold corpus");
      }
      pred.push_back(p[i].labels);
      ref.push_back(g[i].labels);
    }
    const auto report = metrics::evaluate(pred, ref, scheme_named(scheme));
    if (macro_f1) *macro_f1 = report.macro_f1;
    std::string t = report.to_table();
    std::string j = report.to_json();
    set_string(table, t);
    try {
      set_string(json, j);
    } catch (...) {
      if (table) soapseg_string_free(*table);
      throw;
    }
  });
}

soapseg_status soapseg_transfer_init(const soapseg_model* source, const char* target_scheme, soapseg_model** out) {
  return guarded([&] {
    require(source, "source");
    require(out, "out");
    const LabelScheme target = scheme_named(target_scheme);
    const LabelScheme from = source->model.scheme();
    tagger::LabelMap map;
    if (from.size() == target.size()) {
      map = tagger::identity_map(from);
    } else if (from.size() == 5 && target.size() == 4) {
      map = tagger::merge_assessment_plan_map();
    } else {
      throw ConfigError("transfer: no label map from " + std::string(from.name()) + " to " + std::string(target.name()));
    }
    *out = new soapseg_model{tagger::transfer_init(source->model, map, target)};
  });
}

soapseg_status soapseg_model_load(const char* path, soapseg_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new soapseg_model{tagger::load_model(path)};
  });
}

soapseg_status soapseg_model_save(const soapseg_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    tagger::save_model(model->model, path);
  });
}

soapseg_status soapseg_model_shape(const soapseg_model* model, int* input_dim, int* num_labels, int* layers,
                                   int* hidden) {
  return guarded([&] {
    require(model, "model");
    const auto& s = model->model.shape;
    if (input_dim) *input_dim = s.input_dim;
    if (num_labels) *num_labels = s.num_labels;
    if (layers) *layers = s.layers;
    if (hidden) *hidden = s.hidden;
  });
}

void soapseg_model_free(soapseg_model* model) { delete model; }

// ---- experiments ----

soapseg_status soapseg_run_experiment(const char* config_json, const char* base_dir, const char* protocol,
                                      const char* output_dir, char** record_json, char** report) {
  return guarded([&] {
    require(config_json, "config_json");
    harness::ExperimentConfig config = harness::ExperimentConfig::from_json(config_json, base_dir ? base_dir : "");
    if (protocol) config.protocol = harness::protocol_from_name(protocol);
    if (output_dir) config.output_dir = output_dir;
    config.validate();
    const harness::RunRecord record = harness::run(config);
    harness::write_record(record, config.output_dir);
    std::string r = record.to_json().dump(2);
    set_string(record_json, r);
    try {
      set_string(report, record.report);
    } catch (...) {
      if (record_json) soapseg_string_free(*record_json);
      throw;
    }
  });
}

}  // extern "C"
