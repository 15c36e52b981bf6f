// soapseg command line. Talks to the library only through soapseg.h.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include "soapseg/soapseg.h"

namespace {

struct Failure : std::runtime_error {
  soapseg_status status;
  Failure(soapseg_status s, const std::string& what) : std::runtime_error(what), status(s) {}
};

void check(soapseg_status s) {
  if (s != SOAPSEG_OK) throw Failure(s, soapseg_last_error());
}

// Owning wrappers over the C handles.
template <typename T, void (*Free)(T*)>
class Handle {
 public:
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p_); }
  T** out() { return &p_; }
  T* get() const { return p_; }

 private:
  T* p_ = nullptr;
};

using Corpus = Handle<soapseg_corpus, soapseg_corpus_free>;
using Lexicon = Handle<soapseg_lexicon, soapseg_lexicon_free>;
using Provider = Handle<soapseg_provider, soapseg_provider_free>;
using Model = Handle<soapseg_model, soapseg_model_free>;

class Text {
 public:
  Text() = default;
  Text(const Text&) = delete;
  Text& operator=(const Text&) = delete;
  ~Text() { soapseg_string_free(p_); }
  char** out() { return &p_; }
  std::string str() const { return p_ ? std::string(p_) : std::string(); }

 private:
  char* p_ = nullptr;
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure(SOAPSEG_ERR_IO, "cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Failure(SOAPSEG_ERR_IO, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Failure(SOAPSEG_ERR_IO, "write failed for '" + path + "'");
}

struct ProviderOptions {
  std::string kind = "hashed";
  std::string embeddings;
  int dim = 256;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--provider", kind, "Paragraph vectors: hashed or file")
        ->check(CLI::IsMember({"hashed", "file"}));
    cmd->add_option("--embeddings", embeddings, "EmbeddingFile for --provider file");
    cmd->add_option("--dim", dim, "Hashed vector dimension");
  }

  void open(Provider& p) const {
    if (kind == "file") {
      if (embeddings.empty()) throw Failure(SOAPSEG_ERR_ARGUMENT, "--provider file needs --embeddings");
      check(soapseg_provider_file(embeddings.c_str(), p.out()));
    } else {
      check(soapseg_provider_hashed(dim, p.out()));
    }
  }
};

void open_lexicon(const std::string& path, Lexicon& lexicon) {
  if (path.empty()) {
    check(soapseg_lexicon_default(lexicon.out()));
  } else {
    check(soapseg_lexicon_load(path.c_str(), lexicon.out()));
  }
}

struct ExperimentOptions {
  std::string config;
  std::string out_dir;
  std::optional<std::uint64_t> seed;

  void add_to(CLI::App* cmd, bool required) {
    auto* opt = cmd->add_option("--config", config, "Experiment config (JSON)");
    if (required) opt->required();
    cmd->add_option("--out-dir", out_dir, "Directory for record.json, report.txt and checkpoints");
    cmd->add_option("--seed", seed, "Run with this single seed instead of the config's list");
  }

  void run(const char* protocol) const {
    nlohmann::ordered_json cfg = nlohmann::ordered_json::parse(read_text(config), nullptr, false);
    if (cfg.is_discarded()) throw Failure(SOAPSEG_ERR_PARSE, config + ": not valid JSON");
    if (seed) cfg["seeds"] = {*seed};
    Text record, report;
    const std::string base = std::filesystem::path(config).parent_path().string();
    check(soapseg_run_experiment(cfg.dump().c_str(), base.c_str(), protocol,
                                 out_dir.empty() ? nullptr : out_dir.c_str(), record.out(), report.out()));
    std::cout << report.str();
    if (!out_dir.empty()) std::cout << "\nrecord written to " << out_dir << "/record.json\n";
  }
};

struct HyperOptions {
  std::optional<int> batch_size, epochs, layers, hidden;
  std::optional<double> learning_rate, clip;
  std::optional<std::uint64_t> seed;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--batch-size", batch_size);
    cmd->add_option("--lr", learning_rate);
    cmd->add_option("--epochs", epochs);
    cmd->add_option("--layers", layers);
    cmd->add_option("--hidden", hidden);
    cmd->add_option("--clip", clip, "Global gradient-norm clip");
    cmd->add_option("--seed", seed);
  }

  std::string json() const {
    nlohmann::ordered_json h = nlohmann::ordered_json::object();
    if (batch_size) h["batch_size"] = *batch_size;
    if (learning_rate) h["learning_rate"] = *learning_rate;
    if (epochs) h["max_epochs"] = *epochs;
    if (layers) h["layers"] = *layers;
    if (hidden) h["hidden"] = *hidden;
    if (clip) h["grad_clip_norm"] = *clip;
    if (seed) h["seed"] = *seed;
    return h.dump();
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SOAP section segmentation: weak labels, Bi-LSTM-CRF tagger, transfer"};
  app.require_subcommand(1);
  app.set_version_flag("--version", soapseg_version());

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a synthetic corpus");
  std::string gen_style = "styleA", gen_config, gen_out, gen_gold;
  std::optional<std::uint64_t> gen_seed;
  std::size_t gen_count = 100;
  gen->add_option("--style", gen_style, "Built-in style")->check(CLI::IsMember({"styleA", "styleB"}));
  gen->add_option("--config", gen_config, "Generator config (JSON); overrides --style");
  gen->add_option("--seed", gen_seed);
  gen->add_option("-n,--count", gen_count, "Number of notes");
  gen->add_option("--out", gen_out, "Raw notes (JSONL)")->required();
  gen->add_option("--gold", gen_gold, "Gold-labeled notes (JSONL)");

  // preprocess
  auto* pre = app.add_subcommand("preprocess", "Split notes into paragraphs and sentences, extract headers");
  std::string pre_in, pre_lexicon, pre_out;
  pre->add_option("--in", pre_in)->required();
  pre->add_option("--lexicon", pre_lexicon, "Header lexicon (HEADER<TAB>LABEL)");
  pre->add_option("--out", pre_out, "JSONL output (default stdout)");

  // weaklabel
  auto* weak = app.add_subcommand("weaklabel", "Weakly label explicitly structured notes");
  std::string weak_in, weak_lexicon, weak_out, weak_report;
  weak->add_option("--in", weak_in)->required();
  weak->add_option("--lexicon", weak_lexicon);
  weak->add_option("--out", weak_out)->required();
  weak->add_option("--report", weak_report, "Summary file (default stdout)");

  // vectorize
  auto* vec = app.add_subcommand("vectorize", "Write paragraph vectors as an EmbeddingFile");
  std::string vec_in, vec_out;
  ProviderOptions vec_provider;
  vec->add_option("--in", vec_in)->required();
  vec_provider.add_to(vec);
  vec->add_option("--out", vec_out)->required();

  // train
  auto* tr = app.add_subcommand("train", "Train the tagger (or run the weak_train protocol with --config)");
  std::string tr_in, tr_val, tr_scheme = "standard", tr_init, tr_out, tr_log;
  ProviderOptions tr_provider;
  HyperOptions tr_hyper;
  ExperimentOptions tr_exp;
  tr->add_option("--in", tr_in, "Labeled training corpus");
  tr->add_option("--validation", tr_val, "Labeled validation corpus");
  tr->add_option("--scheme", tr_scheme)->check(CLI::IsMember({"standard", "merged"}));
  tr->add_option("--init", tr_init, "Start from this checkpoint");
  tr->add_option("--out", tr_out, "Checkpoint path");
  tr->add_option("--log", tr_log, "Per-epoch log (JSON)");
  tr_provider.add_to(tr);
  tr_hyper.add_to(tr);
  tr->add_option("--config", tr_exp.config, "Experiment config; runs the weak_train protocol");
  tr->add_option("--out-dir", tr_exp.out_dir);

  // predict
  auto* pr = app.add_subcommand("predict", "Label notes with a trained model");
  std::string pr_model, pr_in, pr_out;
  ProviderOptions pr_provider;
  pr->add_option("--model", pr_model)->required();
  pr->add_option("--in", pr_in)->required();
  pr->add_option("--out", pr_out)->required();
  pr_provider.add_to(pr);

  // eval
  auto* ev = app.add_subcommand("eval", "Score predictions against gold labels");
  std::string ev_pred, ev_gold, ev_scheme = "standard", ev_json;
  ev->add_option("--pred", ev_pred)->required();
  ev->add_option("--gold", ev_gold)->required();
  ev->add_option("--scheme", ev_scheme)->check(CLI::IsMember({"standard", "merged"}));
  ev->add_option("--json", ev_json, "Also write the report as JSON");

  // transfer
  auto* tf = app.add_subcommand("transfer", "Warm-start a model for a target scheme, or run the transfer protocol");
  std::string tf_source, tf_scheme = "merged", tf_out;
  ExperimentOptions tf_exp;
  tf->add_option("--source", tf_source, "Source checkpoint");
  tf->add_option("--scheme", tf_scheme, "Target label scheme")->check(CLI::IsMember({"standard", "merged"}));
  tf->add_option("--out", tf_out, "Initialized checkpoint");
  tf_exp.add_to(tf, false);

  auto* ab = app.add_subcommand("ablate", "Train-size ablation with Spearman trends");
  ExperimentOptions ab_exp;
  ab_exp.add_to(ab, true);

  auto* bench = app.add_subcommand("bench", "Per-stage execution time");
  ExperimentOptions bench_exp;
  bench_exp.add_to(bench, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      std::string config_json;
      if (!gen_config.empty()) {
        auto cfg = nlohmann::ordered_json::parse(read_text(gen_config), nullptr, false);
        if (cfg.is_discarded()) throw Failure(SOAPSEG_ERR_PARSE, gen_config + ": not valid JSON");
        if (gen_seed) cfg["seed"] = *gen_seed;
        config_json = cfg.dump();
      } else {
        Text builtin;
        check(soapseg_generator_builtin(gen_style.c_str(), gen_seed.value_or(1), builtin.out()));
        config_json = builtin.str();
      }
      Corpus raw, gold;
      check(soapseg_generate(config_json.c_str(), gen_count, raw.out(), gen_gold.empty() ? nullptr : gold.out()));
      check(soapseg_corpus_write(raw.get(), gen_out.c_str()));
      if (!gen_gold.empty()) check(soapseg_corpus_write(gold.get(), gen_gold.c_str()));
    } else if (*pre) {
      Corpus corpus;
      Lexicon lexicon;
      check(soapseg_corpus_read(pre_in.c_str(), corpus.out()));
      open_lexicon(pre_lexicon, lexicon);
      Text out;
      check(soapseg_preprocess(corpus.get(), lexicon.get(), out.out()));
      write_text(pre_out, out.str());
    } else if (*weak) {
      Corpus corpus, labeled;
      Lexicon lexicon;
      check(soapseg_corpus_read(weak_in.c_str(), corpus.out()));
      open_lexicon(weak_lexicon, lexicon);
      Text report;
      check(soapseg_weaklabel(corpus.get(), lexicon.get(), labeled.out(), report.out()));
      check(soapseg_corpus_write(labeled.get(), weak_out.c_str()));
      write_text(weak_report, report.str());
    } else if (*vec) {
      Corpus corpus;
      Provider provider;
      check(soapseg_corpus_read(vec_in.c_str(), corpus.out()));
      vec_provider.open(provider);
      check(soapseg_vectorize(corpus.get(), provider.get(), vec_out.c_str()));
      int dim = 0;
      std::uint64_t count = 0;
      check(soapseg_embeddings_info(vec_out.c_str(), &dim, &count));
      std::cout << count << " vectors of dimension " << dim << " written to " << vec_out << "\n";
    } else if (*tr) {
      if (!tr_exp.config.empty()) {
        tr_exp.seed = tr_hyper.seed;
        tr_exp.run("weak_train");
      } else {
        if (tr_in.empty() || tr_out.empty()) throw Failure(SOAPSEG_ERR_ARGUMENT, "train needs --in and --out (or --config)");
        Corpus train, validation;
        Provider provider;
        Model init, model;
        check(soapseg_corpus_read(tr_in.c_str(), train.out()));
        if (!tr_val.empty()) check(soapseg_corpus_read(tr_val.c_str(), validation.out()));
        if (!tr_init.empty()) check(soapseg_model_load(tr_init.c_str(), init.out()));
        tr_provider.open(provider);
        Text log;
        check(soapseg_train(train.get(), validation.get(), provider.get(), tr_scheme.c_str(), tr_hyper.json().c_str(),
                            init.get(), model.out(), log.out()));
        check(soapseg_model_save(model.get(), tr_out.c_str()));
        if (!tr_log.empty()) write_text(tr_log, log.str() + "\n");
        const auto parsed = nlohmann::json::parse(log.str());
        std::cout << "best epoch " << parsed["best_epoch"] << ", validation macro-F1 "
                  << parsed["best_validation_macro_f1"] << "\ncheckpoint written to " << tr_out << "\n";
      }
    } else if (*pr) {
      Model model;
      Corpus corpus, out;
      Provider provider;
      check(soapseg_model_load(pr_model.c_str(), model.out()));
      check(soapseg_corpus_read(pr_in.c_str(), corpus.out()));
      pr_provider.open(provider);
      check(soapseg_predict(model.get(), corpus.get(), provider.get(), out.out()));
      check(soapseg_corpus_write(out.get(), pr_out.c_str()));
    } else if (*ev) {
      Corpus pred, gold;
      check(soapseg_corpus_read(ev_pred.c_str(), pred.out()));
      check(soapseg_corpus_read(ev_gold.c_str(), gold.out()));
      double macro = 0.0;
      Text table, json;
      check(soapseg_evaluate(pred.get(), gold.get(), ev_scheme.c_str(), &macro, table.out(), json.out()));
      std::cout << table.str();
      if (!ev_json.empty()) write_text(ev_json, json.str() + "\n");
    } else if (*tf) {
      if (!tf_exp.config.empty()) {
        tf_exp.run("transfer");
      } else {
        if (tf_source.empty() || tf_out.empty()) {
          throw Failure(SOAPSEG_ERR_ARGUMENT, "transfer needs --source and --out (or --config)");
        }
        Model source, target;
        check(soapseg_model_load(tf_source.c_str(), source.out()));
        check(soapseg_transfer_init(source.get(), tf_scheme.c_str(), target.out()));
        check(soapseg_model_save(target.get(), tf_out.c_str()));
      }
    } else if (*ab) {
      ab_exp.run("ablation");
    } else if (*bench) {
      bench_exp.run("timing");
    }
  } catch (const Failure& e) {
    std::cerr << "soapseg: " << soapseg_status_name(e.status) << ": " << e.what() << "\n";
    return static_cast<int>(e.status) + 1;
  } catch (const std::exception& e) {
    std::cerr << "soapseg: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
