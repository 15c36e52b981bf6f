#include "soapseg/harness.hpp"

#include <chrono>
#include <filesystem>
#include <iomanip>
#include <memory>
#include <sstream>

#include "soapseg/metrics.hpp"
#include "soapseg/preprocess.hpp"
#include "soapseg/rng.hpp"
#include "soapseg/weaklabel.hpp"
#include "util.hpp"

namespace soapseg::harness {

using json = nlohmann::ordered_json;
using tagger::Matrix;
using tagger::TaggerModel;

LabelScheme CorpusSource::label_scheme() const {
  if (scheme == "standard") return LabelScheme::standard();
  if (scheme == "merged") return LabelScheme::merged();
  throw ConfigError("corpus '" + name + "': unknown label scheme '" + scheme + "' (expected standard|merged)");
}

std::string_view protocol_name(Protocol p) {
  switch (p) {
    case Protocol::WeakTrain: return "weak_train";
    case Protocol::Transfer: return "transfer";
    case Protocol::Ablation: return "ablation";
    case Protocol::Timing: return "timing";
  }
  return "weak_train";
}

Protocol protocol_from_name(std::string_view name) {
  if (name == "weak_train") return Protocol::WeakTrain;
  if (name == "transfer") return Protocol::Transfer;
  if (name == "ablation") return Protocol::Ablation;
  if (name == "timing") return Protocol::Timing;
  throw ConfigError("unknown protocol '" + std::string(name) + "' (expected weak_train|transfer|ablation|timing)");
}

// ---- config ------------------------------------------------------------------

namespace {

json source_to_json(const CorpusSource& s) {
  json obj;
  obj["name"] = s.name;
  if (!s.path.empty()) obj["path"] = s.path;
  if (s.generator) {
    obj["generator"] = json::parse(s.generator->to_json());
    obj["count"] = s.count;
  }
  obj["scheme"] = s.scheme;
  return obj;
}

std::string resolve(const std::string& path, const std::string& base_dir) {
  if (path.empty() || base_dir.empty() || std::filesystem::path(path).is_absolute()) return path;
  return (std::filesystem::path(base_dir) / path).lexically_normal().string();
}

// "generator" is {"builtin": name, "seed": n}, {"file": path, "seed": n}, or a
// full generator object.
corpus::GeneratorConfig generator_from_json(const json& g, const std::string& where, const std::string& base_dir) {
  if (!g.is_object()) throw ConfigError(where + ".generator must be an object");
  if (g.contains("builtin")) {
    return corpus::GeneratorConfig::builtin(g.at("builtin").get<std::string>(), g.value("seed", 1ULL));
  }
  if (g.contains("file")) {
    auto config = corpus::GeneratorConfig::from_json(detail::read_file(resolve(g.at("file").get<std::string>(), base_dir)));
    if (g.contains("seed")) config.seed = g.at("seed").get<std::uint64_t>();
    return config;
  }
  return corpus::GeneratorConfig::from_json(g.dump());
}

CorpusSource source_from_json(const json& obj, const std::string& where, const std::string& base_dir) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  CorpusSource s;
  s.name = obj.value("name", where);
  s.path = resolve(obj.value("path", ""), base_dir);
  s.scheme = obj.value("scheme", "standard");
  if (auto it = obj.find("generator"); it != obj.end()) {
    s.generator = generator_from_json(*it, where, base_dir);
    s.count = obj.value("count", std::size_t{0});
  }
  return s;
}

void validate_source(const CorpusSource& s) {
  if (s.path.empty() == !s.generator.has_value()) {
    throw ConfigError("corpus '" + s.name + "': give exactly one of \"path\" or \"generator\"");
  }
  if (s.generator) {
    s.generator->validate();
    if (s.count < 1) throw ConfigError("corpus '" + s.name + "': \"count\" must be >= 1");
  }
  (void)s.label_scheme();
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(std::string_view json_text, const std::string& base_dir) {
  json obj;
  try {
    obj = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  if (!obj.is_object()) throw ConfigError("experiment config: expected a JSON object");
  ExperimentConfig c;
  try {
    c.protocol = protocol_from_name(obj.value("protocol", "weak_train"));
    if (obj.contains("source")) c.source = source_from_json(obj.at("source"), "source", base_dir);
    if (obj.contains("target")) c.target = source_from_json(obj.at("target"), "target", base_dir);
    if (auto it = obj.find("eval_sets"); it != obj.end()) {
      for (std::size_t i = 0; i < it->size(); ++i) {
        c.eval_sets.push_back(source_from_json(it->at(i), "eval_sets[" + std::to_string(i) + "]", base_dir));
      }
    }
    c.source_checkpoint = resolve(obj.value("source_checkpoint", ""), base_dir);
    c.source_init = obj.value("source_init", "weak_train");
    c.lexicon = resolve(obj.value("lexicon", ""), base_dir);
    c.provider = obj.value("provider", "hashed");
    c.embeddings = resolve(obj.value("embeddings", ""), base_dir);
    c.dim = obj.value("dim", 256);
    if (obj.contains("hyperparams")) c.hyper = tagger::Hyperparams::from_json(obj.at("hyperparams").dump());
    if (obj.contains("seeds")) c.seeds = obj.at("seeds").get<std::vector<std::uint64_t>>();
    if (auto it = obj.find("train_sizes"); it != obj.end()) {
      for (const auto& v : *it) {
        if (v.is_string() && v.get<std::string>() == "full") {
          c.train_sizes.push_back(0);
        } else if (v.is_number_unsigned()) {
          c.train_sizes.push_back(v.get<std::size_t>());
        } else {
          throw ConfigError("experiment config: train_sizes entries must be counts or \"full\"");
        }
      }
    }
    c.output_dir = obj.value("output_dir", "");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  try {
    return from_json(detail::read_file(path), std::filesystem::path(path).parent_path().string());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string ExperimentConfig::to_json() const {
  json obj;
  obj["protocol"] = std::string(protocol_name(protocol));
  if (source) obj["source"] = source_to_json(*source);
  if (target) obj["target"] = source_to_json(*target);
  json sets = json::array();
  for (const auto& s : eval_sets) sets.push_back(source_to_json(s));
  obj["eval_sets"] = std::move(sets);
  if (!source_checkpoint.empty()) obj["source_checkpoint"] = source_checkpoint;
  obj["source_init"] = source_init;
  if (!lexicon.empty()) obj["lexicon"] = lexicon;
  obj["provider"] = provider;
  if (!embeddings.empty()) obj["embeddings"] = embeddings;
  obj["dim"] = dim;
  obj["hyperparams"] = json::parse(hyper.to_json());
  obj["seeds"] = seeds;
  json sizes = json::array();
  for (std::size_t s : train_sizes) {
    if (s == 0) {
      sizes.push_back("full");
    } else {
      sizes.push_back(s);
    }
  }
  obj["train_sizes"] = std::move(sizes);
  if (!output_dir.empty()) obj["output_dir"] = output_dir;
  return obj.dump(2);
}

void ExperimentConfig::validate() const {
  hyper.validate();
  if (seeds.empty()) throw ConfigError("experiment config: seeds must be nonempty");
  if (provider != "hashed" && provider != "file") {
    throw ConfigError("experiment config: unknown provider '" + provider + "' (expected hashed|file)");
  }
  if (provider == "file" && embeddings.empty()) throw ConfigError("experiment config: file provider needs \"embeddings\"");
  if (source_init != "weak_train" && source_init != "random") {
    throw ConfigError("experiment config: source_init must be weak_train or random");
  }
  if (source) validate_source(*source);
  if (target) validate_source(*target);
  for (const auto& s : eval_sets) validate_source(s);
  switch (protocol) {
    case Protocol::WeakTrain:
    case Protocol::Timing:
      if (!source) throw ConfigError("experiment config: this protocol needs a \"source\" corpus");
      break;
    case Protocol::Ablation:
      if (!source) throw ConfigError("experiment config: ablation needs a \"source\" corpus");
      if (train_sizes.empty()) throw ConfigError("experiment config: ablation needs train_sizes");
      break;
    case Protocol::Transfer:
      if (!target) throw ConfigError("experiment config: transfer needs a \"target\" corpus");
      if (train_sizes.empty()) throw ConfigError("experiment config: transfer needs train_sizes");
      if (source_checkpoint.empty() && source_init == "weak_train" && !source) {
        throw ConfigError("experiment config: transfer needs a source checkpoint or a \"source\" corpus");
      }
      break;
  }
}

std::string ExperimentConfig::hash() const {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << detail::fnv1a64(to_json());
  return os.str();
}

// ---- splits --------------------------------------------------------------------

Split split_indices(std::size_t n, std::uint64_t seed) {
  const auto order = seeded_permutation(n, detail::mix64(seed ^ 0x5b117ULL));
  const std::size_t tenth = n / 10;
  Split s;
  s.validation.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(tenth));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(tenth), order.begin() + static_cast<std::ptrdiff_t>(2 * tenth));
  s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(2 * tenth), order.end());
  return s;
}

std::vector<std::size_t> nested_subsample(const std::vector<std::size_t>& pool, std::size_t k, std::uint64_t seed) {
  if (k > pool.size()) {
    throw ConfigError("train size " + std::to_string(k) + " exceeds the train pool of " + std::to_string(pool.size()));
  }
  const auto order = seeded_permutation(pool.size(), detail::mix64(seed ^ 0x5ab5ULL));
  std::vector<std::size_t> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(pool[order[i]]);
  return out;
}

// ---- records -------------------------------------------------------------------

json RunRecord::to_json(bool with_timing) const {
  json obj;
  obj["protocol"] = protocol;
  obj["config_hash"] = config_hash;
  obj["config"] = config;
  obj["results"] = results;
  if (with_timing) {
    json t;
    for (const auto& [stage, seconds] : timing) t[stage] = seconds;
    obj["timing_seconds"] = std::move(t);
  }
  return obj;
}

std::string RunRecord::metrics_fingerprint() const { return to_json(false).dump(); }

void write_record(const RunRecord& record, const std::string& output_dir) {
  if (output_dir.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(output_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + output_dir + "': " + ec.message());
  detail::write_file(output_dir + "/record.json", record.to_json().dump(2) + "\n");
  detail::write_file(output_dir + "/report.txt", record.report);
}

// ---- shared pipeline pieces ----------------------------------------------------------

namespace {

using Clock = std::chrono::steady_clock;

class Stopwatch {
 public:
  explicit Stopwatch(std::vector<std::pair<std::string, double>>& sink) : sink_(sink) {}
  template <typename F>
  auto time(const std::string& stage, F&& f) {
    const auto t0 = Clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      add(stage, t0);
    } else {
      auto result = f();
      add(stage, t0);
      return result;
    }
  }

 private:
  void add(const std::string& stage, Clock::time_point t0) {
    const double s = std::chrono::duration<double>(Clock::now() - t0).count();
    for (auto& [name, total] : sink_) {
      if (name == stage) {
        total += s;
        return;
      }
    }
    sink_.emplace_back(stage, s);
  }
  std::vector<std::pair<std::string, double>>& sink_;
};

// A labeled corpus with its matrices, computed once per run.
struct Dataset {
  std::string name;
  LabelScheme scheme = LabelScheme::standard();
  std::vector<LabeledNote> notes;
  std::vector<Matrix> x;
  std::vector<std::vector<int>> y;  // indices in `scheme`

  std::vector<tagger::Example> examples(const std::vector<std::size_t>& idx) const {
    std::vector<tagger::Example> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back({x[i], y[i]});
    return out;
  }
  std::vector<std::size_t> all() const {
    std::vector<std::size_t> idx(notes.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return idx;
  }
};

std::vector<RawNote> load_raw(const CorpusSource& s) {
  if (s.generator) return corpus::generate_corpus(*s.generator, s.count).raw;
  const corpus::Corpus c = corpus::read_corpus(s.path);
  if (const auto* raw = std::get_if<std::vector<RawNote>>(&c)) return *raw;
  return corpus::raw_notes(std::get<std::vector<LabeledNote>>(c));
}

std::vector<LabeledNote> load_gold(const CorpusSource& s) {
  if (s.generator) return corpus::generate_corpus(*s.generator, s.count).gold;
  return corpus::read_labeled_corpus(s.path);
}

std::unique_ptr<vectorize::Provider> make_provider(const ExperimentConfig& c) {
  if (c.provider == "file") return vectorize::FileProvider::open(c.embeddings);
  return std::make_unique<vectorize::HashedProvider>(c.dim);
}

preprocess::HeaderLexicon make_lexicon(const ExperimentConfig& c) {
  return c.lexicon.empty() ? preprocess::HeaderLexicon::defaults() : preprocess::HeaderLexicon::load(c.lexicon);
}

Dataset make_dataset(std::string name, const LabelScheme& scheme, std::vector<LabeledNote> notes,
                     const vectorize::Provider& provider) {
  Dataset d;
  d.name = std::move(name);
  d.scheme = scheme;
  for (auto& note : notes) {
    validate(note);
    if (note.paragraphs.empty()) continue;
    std::vector<int> y;
    y.reserve(note.labels.size());
    for (SoapLabel l : note.labels) y.push_back(scheme.index_of(scheme.project(l)));
    d.x.push_back(tagger::to_matrix(vectorize::vectorize_note(note, provider)));
    d.y.push_back(std::move(y));
    d.notes.push_back(std::move(note));
  }
  return d;
}

struct WeakSource {
  weaklabel::WeakCorpusReport report;
  Dataset data;
};

WeakSource weak_source(const ExperimentConfig& c, const vectorize::Provider& provider, Stopwatch& watch) {
  const auto raw = watch.time("load", [&] { return load_raw(*c.source); });
  auto weak = watch.time("preprocess", [&] { return weaklabel::build_weak_corpus(raw, make_lexicon(c)); });
  if (weak.notes.empty()) throw ValidationError("source corpus '" + c.source->name + "': no explicitly structured notes");
  WeakSource out;
  out.report = weak.report;
  out.data = watch.time("vectorize", [&] {
    return make_dataset(c.source->name + ":weak", LabelScheme::standard(), std::move(weak.notes), provider);
  });
  return out;
}

std::vector<Dataset> gold_sets(const ExperimentConfig& c, const vectorize::Provider& provider, Stopwatch& watch) {
  std::vector<Dataset> out;
  for (const auto& s : c.eval_sets) {
    auto notes = watch.time("load", [&] { return load_gold(s); });
    out.push_back(watch.time("vectorize", [&] { return make_dataset(s.name, s.label_scheme(), std::move(notes), provider); }));
  }
  return out;
}

json report_json(const metrics::EvalReport& r) { return json::parse(r.to_json()); }

// Scored in the coarser of the model's and the data's schemes.
metrics::EvalReport score(const TaggerModel& model, const Dataset& d, const std::vector<std::size_t>& idx) {
  std::vector<Matrix> inputs;
  std::vector<metrics::LabelSequence> gold;
  inputs.reserve(idx.size());
  for (std::size_t i : idx) {
    inputs.push_back(d.x[i]);
    gold.push_back(d.notes[i].labels);
  }
  const auto pred = tagger::predict_labels(model, inputs);
  const LabelScheme model_scheme = model.scheme();
  const LabelScheme& scheme = model_scheme.size() < d.scheme.size() ? model_scheme : d.scheme;
  return metrics::evaluate(pred, gold, scheme);
}

tagger::Hyperparams with_seed(tagger::Hyperparams h, std::uint64_t seed) {
  h.seed = seed;
  return h;
}

tagger::ModelShape shape_for(const ExperimentConfig& c, int input_dim, const LabelScheme& scheme) {
  return {input_dim, static_cast<int>(scheme.size()), c.hyper.layers, c.hyper.hidden};
}

json mean_std(const std::vector<double>& v) {
  json obj;
  obj["mean"] = metrics::mean(v);
  obj["std"] = v.size() >= 2 ? metrics::sample_stddev(v) : 0.0;
  obj["values"] = v;
  return obj;
}

json epoch_log(const tagger::TrainResult& r) {
  json epochs = json::array();
  for (const auto& e : r.log) {
    epochs.push_back({{"epoch", e.epoch}, {"mean_loss", e.mean_loss}, {"validation_macro_f1", e.validation_macro_f1}});
  }
  return epochs;
}

std::string pct(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << 100.0 * v;
  return os.str();
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string size_label(std::size_t requested, std::size_t actual) {
  return requested == 0 ? "Full(" + std::to_string(actual) + ")" : std::to_string(actual);
}

RunRecord new_record(const ExperimentConfig& c) {
  RunRecord r;
  r.protocol = std::string(protocol_name(c.protocol));
  r.config_hash = c.hash();
  r.config = json::parse(c.to_json());
  return r;
}

void finish(RunRecord& r, Clock::time_point t0) {
  r.timing.emplace_back("total", std::chrono::duration<double>(Clock::now() - t0).count());
}

tagger::TrainResult train_weak_model(const ExperimentConfig& c, const Dataset& weak, const Split& split,
                                     std::uint64_t seed, Stopwatch& watch) {
  const auto init = TaggerModel::initialize(shape_for(c, static_cast<int>(weak.x.front().cols()), weak.scheme), seed);
  const auto train_set = weak.examples(split.train);
  const auto validation = weak.examples(split.validation);
  return watch.time("train", [&] { return tagger::train(init, train_set, validation, with_seed(c.hyper, seed)); });
}

}  // namespace

// ---- weak training -----------------------------------------------------------------

RunRecord run_weak_train(const ExperimentConfig& config) {
  config.validate();
  if (!config.source) throw ConfigError("weak_train: missing source corpus");
  const auto t0 = Clock::now();
  RunRecord record = new_record(config);
  Stopwatch watch(record.timing);
  const auto provider = make_provider(config);
  const WeakSource weak = weak_source(config, *provider, watch);
  const std::vector<Dataset> evals = gold_sets(config, *provider, watch);

  json results;
  results["weak_corpus"] = {{"total", weak.report.total},
                            {"retained", weak.report.retained},
                            {"retained_fraction", weak.report.retained_fraction()}};
  const std::size_t n = weak.data.notes.size();
  if (n < 10) throw ConfigError("weak_train: need at least 10 retained notes for an 80/10/10 split, got " + std::to_string(n));

  std::map<std::string, std::vector<double>> f1s;
  json per_seed = json::array();
  std::ostringstream report;
  report << "Weak training on " << config.source->name << " (" << n << " notes retained of " << weak.report.total
         << ")\n\n";
  for (std::uint64_t seed : config.seeds) {
    const Split split = split_indices(n, seed);
    const tagger::TrainResult trained = train_weak_model(config, weak.data, split, seed, watch);
    json entry;
    entry["seed"] = seed;
    entry["split"] = {{"train", split.train.size()}, {"validation", split.validation.size()}, {"test", split.test.size()}};
    entry["best_epoch"] = trained.best_epoch;
    entry["best_validation_macro_f1"] = trained.best_validation_macro_f1;
    entry["epochs"] = epoch_log(trained);
    json evaluations;
    const auto weak_report = watch.time("predict", [&] { return score(trained.model, weak.data, split.test); });
    evaluations["weak_test"] = report_json(weak_report);
    f1s["weak_test"].push_back(weak_report.macro_f1);
    report << "seed " << seed << " weak test\n" << weak_report.to_table() << "\n";
    for (const Dataset& d : evals) {
      const auto r = watch.time("predict", [&] { return score(trained.model, d, d.all()); });
      evaluations[d.name] = report_json(r);
      f1s[d.name].push_back(r.macro_f1);
      report << "seed " << seed << " " << d.name << "\n" << r.to_table() << "\n";
    }
    entry["evaluations"] = std::move(evaluations);
    per_seed.push_back(std::move(entry));
    if (!config.output_dir.empty()) {
      std::filesystem::create_directories(config.output_dir);
      tagger::save_model(trained.model, config.output_dir + "/model-seed" + std::to_string(seed) + ".soaptag");
    }
  }
  results["seeds"] = std::move(per_seed);
  json summary;
  report << "Macro-F1 over seeds\n";
  std::vector<std::string> order{"weak_test"};
  for (const Dataset& d : evals) order.push_back(d.name);
  for (const auto& name : order) {
    summary[name] = mean_std(f1s[name]);
    report << "  " << std::left << std::setw(24) << name << " Avg. " << pct(metrics::mean(f1s[name])) << "  Std. "
           << pct(f1s[name].size() >= 2 ? metrics::sample_stddev(f1s[name]) : 0.0) << "\n";
  }
  results["summary"] = std::move(summary);
  record.results = std::move(results);
  record.report = report.str();
  finish(record, t0);
  return record;
}

// ---- transfer comparison -------------------------------------------------------------

RunRecord run_transfer_comparison(const ExperimentConfig& config) {
  config.validate();
  const auto t0 = Clock::now();
  RunRecord record = new_record(config);
  Stopwatch watch(record.timing);
  const auto provider = make_provider(config);

  const LabelScheme target_scheme = config.target->label_scheme();
  auto target_notes = watch.time("load", [&] { return load_gold(*config.target); });
  const Dataset target = watch.time(
      "vectorize", [&] { return make_dataset(config.target->name, target_scheme, std::move(target_notes), *provider); });
  if (target.notes.size() < 10) throw ConfigError("transfer: target corpus needs at least 10 notes");
  // One fixed target split so that every arm is scored on the same test notes.
  const Split split = split_indices(target.notes.size(), config.seeds.front());
  for (std::size_t s : config.train_sizes) {
    if (s > split.train.size()) {
      throw ConfigError("transfer: train size " + std::to_string(s) + " exceeds the target train pool of " +
                        std::to_string(split.train.size()));
    }
  }
  const int input_dim = static_cast<int>(target.x.front().cols());

  json results;
  // The pretrained source, shared by all seeds unless it is the random-init control.
  std::optional<TaggerModel> pretrained;
  if (!config.source_checkpoint.empty()) {
    pretrained = watch.time("load", [&] { return tagger::load_model(config.source_checkpoint); });
    results["source"] = {{"checkpoint", config.source_checkpoint}};
  } else if (config.source_init == "weak_train") {
    const WeakSource weak = weak_source(config, *provider, watch);
    const std::size_t n = weak.data.notes.size();
    if (n < 10) throw ConfigError("transfer: source needs at least 10 retained notes");
    const Split source_split = split_indices(n, config.seeds.front());
    const auto trained = train_weak_model(config, weak.data, source_split, config.seeds.front(), watch);
    const auto r = watch.time("predict", [&] { return score(trained.model, weak.data, source_split.test); });
    pretrained = trained.model;
    results["source"] = {{"corpus", config.source->name},
                         {"seed", config.seeds.front()},
                         {"best_epoch", trained.best_epoch},
                         {"weak_test_macro_f1", r.macro_f1}};
  } else {
    results["source"] = {{"init", "random"}};
  }
  if (pretrained && pretrained->shape.input_dim != input_dim) {
    throw DimensionError("transfer: source model input " + std::to_string(pretrained->shape.input_dim) +
                         " does not match target vectors of dimension " + std::to_string(input_dim));
  }

  auto label_map = [&](const TaggerModel& source) {
    const LabelScheme source_scheme = source.scheme();
    if (source_scheme.size() == target_scheme.size()) return tagger::identity_map(source_scheme);
    if (source_scheme.size() == 5 && target_scheme.size() == 4) return tagger::merge_assessment_plan_map();
    throw ConfigError("transfer: cannot map a " + std::to_string(source_scheme.size()) + "-label source onto a " +
                      std::to_string(target_scheme.size()) + "-label target");
  };

  const tagger::ModelShape target_shape = shape_for(config, input_dim, target_scheme);
  const auto validation = target.examples(split.validation);
  json rows = json::array();
  std::ostringstream report;
  report << "Random vs transfer initialization on " << config.target->name << " (test " << split.test.size()
         << " notes, validation " << split.validation.size() << ")\n\n";
  report << std::left << std::setw(12) << "Size" << std::setw(10) << "Arm" << std::right << std::setw(8) << "Avg."
         << std::setw(8) << "Std." << std::setw(9) << "Delta" << std::setw(10) << "P-value" << "\n";

  for (std::size_t requested : config.train_sizes) {
    const std::size_t k = requested == 0 ? split.train.size() : requested;
    std::vector<double> random_f1, transfer_f1;
    for (std::uint64_t seed : config.seeds) {
      const auto subset = nested_subsample(split.train, k, seed);
      const auto train_set = target.examples(subset);
      const auto hyper = with_seed(config.hyper, seed);

      const TaggerModel random_init = TaggerModel::initialize(target_shape, seed);
      const TaggerModel source = pretrained ? *pretrained
                                            : TaggerModel::initialize(
                                                  shape_for(config, input_dim, LabelScheme::standard()), seed);
      const TaggerModel transfer_start = tagger::transfer_init(source, label_map(source), target_scheme);

      const auto random_run = watch.time("train", [&] { return tagger::train(random_init, train_set, validation, hyper); });
      const auto transfer_run =
          watch.time("train", [&] { return tagger::train(transfer_start, train_set, validation, hyper); });
      random_f1.push_back(watch.time("predict", [&] { return score(random_run.model, target, split.test).macro_f1; }));
      transfer_f1.push_back(
          watch.time("predict", [&] { return score(transfer_run.model, target, split.test).macro_f1; }));
    }
    const double delta = metrics::mean(transfer_f1) - metrics::mean(random_f1);
    json row;
    row["size"] = requested == 0 ? json("full") : json(requested);
    row["notes"] = k;
    row["random"] = mean_std(random_f1);
    row["transfer"] = mean_std(transfer_f1);
    row["delta"] = delta;
    if (config.seeds.size() >= 2) {
      const auto t = metrics::welch_t_test(transfer_f1, random_f1);
      row["welch"] = {{"statistic", t.statistic}, {"df", t.df}, {"p_value", t.p_value}};
      report << std::left << std::setw(12) << size_label(requested, k) << std::setw(10) << "Random" << std::right
             << std::setw(8) << pct(metrics::mean(random_f1)) << std::setw(8) << pct(metrics::sample_stddev(random_f1))
             << "\n"
             << std::left << std::setw(12) << "" << std::setw(10) << "Transfer" << std::right << std::setw(8)
             << pct(metrics::mean(transfer_f1)) << std::setw(8) << pct(metrics::sample_stddev(transfer_f1))
             << std::setw(9) << pct(delta) << std::setw(10) << fixed(t.p_value, 4) << "\n";
    } else {
      report << std::left << std::setw(12) << size_label(requested, k) << std::setw(10) << "Random" << std::right
             << std::setw(8) << pct(metrics::mean(random_f1)) << "\n"
             << std::left << std::setw(12) << "" << std::setw(10) << "Transfer" << std::right << std::setw(8)
             << pct(metrics::mean(transfer_f1)) << std::setw(8) << "" << std::setw(9) << pct(delta) << "\n";
    }
    rows.push_back(std::move(row));
  }
  results["target_split"] = {{"train_pool", split.train.size()},
                             {"validation", split.validation.size()},
                             {"test", split.test.size()}};
  results["rows"] = std::move(rows);
  record.results = std::move(results);
  record.report = report.str();
  finish(record, t0);
  return record;
}

// ---- size ablation --------------------------------------------------------------------

RunRecord run_size_ablation(const ExperimentConfig& config) {
  config.validate();
  const auto t0 = Clock::now();
  RunRecord record = new_record(config);
  Stopwatch watch(record.timing);
  const auto provider = make_provider(config);
  const WeakSource weak = weak_source(config, *provider, watch);
  const std::vector<Dataset> evals = gold_sets(config, *provider, watch);
  const std::size_t n = weak.data.notes.size();
  if (n < 10) throw ConfigError("ablation: need at least 10 retained notes");

  std::vector<std::string> names{"weak_test"};
  for (const Dataset& d : evals) names.push_back(d.name);
  // scores[name][size index] -> per-seed macro-F1
  std::map<std::string, std::vector<std::vector<double>>> scores;
  for (const auto& name : names) scores[name].resize(config.train_sizes.size());
  std::vector<double> sizes;

  for (std::uint64_t seed : config.seeds) {
    const Split split = split_indices(n, seed);
    const auto validation = weak.data.examples(split.validation);
    const auto hyper = with_seed(config.hyper, seed);
    for (std::size_t si = 0; si < config.train_sizes.size(); ++si) {
      const std::size_t requested = config.train_sizes[si];
      const std::size_t k = requested == 0 ? split.train.size() : requested;
      if (k > split.train.size()) {
        throw ConfigError("ablation: train size " + std::to_string(k) + " exceeds the weak train pool of " +
                          std::to_string(split.train.size()));
      }
      if (seed == config.seeds.front()) sizes.push_back(static_cast<double>(k));
      const auto train_set = weak.data.examples(nested_subsample(split.train, k, seed));
      const auto init = TaggerModel::initialize(shape_for(config, static_cast<int>(weak.data.x.front().cols()),
                                                          LabelScheme::standard()),
                                                seed);
      const auto trained = watch.time("train", [&] { return tagger::train(init, train_set, validation, hyper); });
      scores["weak_test"][si].push_back(
          watch.time("predict", [&] { return score(trained.model, weak.data, split.test).macro_f1; }));
      for (const Dataset& d : evals) {
        scores[d.name][si].push_back(watch.time("predict", [&] { return score(trained.model, d, d.all()).macro_f1; }));
      }
    }
  }

  json results;
  results["sizes"] = sizes;
  json per_set;
  std::ostringstream report;
  report << "Train-size ablation on " << config.source->name << " (macro-F1, mean over " << config.seeds.size()
         << " seeds)\n\n"
         << std::left << std::setw(24) << "Eval set";
  for (double s : sizes) report << std::right << std::setw(9) << static_cast<std::size_t>(s);
  report << std::setw(9) << "rho" << "\n";
  for (const auto& name : names) {
    std::vector<double> means;
    json by_size = json::array();
    for (std::size_t si = 0; si < sizes.size(); ++si) {
      means.push_back(metrics::mean(scores[name][si]));
      json cell = mean_std(scores[name][si]);
      cell["size"] = sizes[si];
      by_size.push_back(std::move(cell));
    }
    const auto rho = metrics::spearman_rho(sizes, means);
    per_set[name] = {{"by_size", std::move(by_size)}, {"spearman_rho", rho.rho}, {"degenerate", rho.degenerate}};
    report << std::left << std::setw(24) << name;
    for (double m : means) report << std::right << std::setw(9) << pct(m);
    report << std::setw(9) << fixed(rho.rho, 2) << "\n";
  }
  results["eval_sets"] = std::move(per_set);
  record.results = std::move(results);
  record.report = report.str();
  finish(record, t0);
  return record;
}

// ---- timing ------------------------------------------------------------------------

RunRecord run_timing(const ExperimentConfig& config) {
  config.validate();
  const auto t0 = Clock::now();
  RunRecord record = new_record(config);
  Stopwatch watch(record.timing);
  const auto provider = watch.time("provider", [&] { return make_provider(config); });
  const WeakSource weak = weak_source(config, *provider, watch);
  const std::size_t n = weak.data.notes.size();
  if (n < 10) throw ConfigError("timing: need at least 10 retained notes");
  const std::uint64_t seed = config.seeds.front();
  const Split split = split_indices(n, seed);
  const auto trained = train_weak_model(config, weak.data, split, seed, watch);
  const auto r = watch.time("predict", [&] { return score(trained.model, weak.data, split.test); });

  std::size_t paragraphs = 0;
  for (const auto& note : weak.data.notes) paragraphs += note.paragraphs.size();
  record.results = {{"notes", n},
                    {"paragraphs", paragraphs},
                    {"provider", provider->name()},
                    {"seed", seed},
                    {"weak_test_macro_f1", r.macro_f1}};
  finish(record, t0);
  std::ostringstream report;
  report << "Execution time (" << n << " notes, " << paragraphs << " paragraphs, provider " << provider->name()
         << ")\n";
  for (const auto& [stage, seconds] : record.timing) {
    report << "  " << std::left << std::setw(12) << stage << std::right << std::setw(12) << fixed(seconds, 4) << " s\n";
  }
  record.report = report.str();
  return record;
}

RunRecord run(const ExperimentConfig& config) {
  switch (config.protocol) {
    case Protocol::WeakTrain: return run_weak_train(config);
    case Protocol::Transfer: return run_transfer_comparison(config);
    case Protocol::Ablation: return run_size_ablation(config);
    case Protocol::Timing: return run_timing(config);
  }
  throw ConfigError("unknown protocol");
}

}  // namespace soapseg::harness
