#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "soapseg/corpus.hpp"
#include "soapseg/tagger.hpp"
#include "soapseg/types.hpp"

// Experiment protocols: weak training with cross-style evaluation, random vs
// transfer initialization over train sizes, train-size ablation, timing.
namespace soapseg::harness {

// Either a JSONL file or a generator run. Exactly one of path / generator.
struct CorpusSource {
  std::string name;
  std::string path;
  std::optional<corpus::GeneratorConfig> generator;
  std::size_t count = 0;              // notes to generate
  std::string scheme = "standard";    // "standard" | "merged"

  LabelScheme label_scheme() const;
};

enum class Protocol { WeakTrain, Transfer, Ablation, Timing };

std::string_view protocol_name(Protocol p);
Protocol protocol_from_name(std::string_view name);

struct ExperimentConfig {
  Protocol protocol = Protocol::WeakTrain;

  // Raw notes that are weakly labeled (weak_train, ablation, timing, and the
  // transfer source when no checkpoint is given).
  std::optional<CorpusSource> source;
  // Gold-labeled evaluation sets.
  std::vector<CorpusSource> eval_sets;
  // Transfer only: the gold target corpus, split into train pool / val / test.
  std::optional<CorpusSource> target;
  std::string source_checkpoint;
  // "weak_train" trains the source on `source`; "random" uses an untrained
  // model built from the same seed as the random arm.
  std::string source_init = "weak_train";

  std::string lexicon;  // empty: built-in lexicon
  std::string provider = "hashed";  // "hashed" | "file"
  std::string embeddings;           // EmbeddingFile for the file provider
  int dim = 256;

  tagger::Hyperparams hyper;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  // 0 stands for the full train pool.
  std::vector<std::size_t> train_sizes;
  std::string output_dir;

  // Relative paths (corpus files, generator files, lexicon, embeddings,
  // checkpoint) resolve against base_dir; load() uses the config's directory.
  static ExperimentConfig load(const std::string& path);
  static ExperimentConfig from_json(std::string_view json_text, const std::string& base_dir = "");
  std::string to_json() const;
  void validate() const;
  // FNV-1a of the canonical JSON form, as 16 hex digits.
  std::string hash() const;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

// 80/10/10 over a seeded permutation; validation and test get floor(n/10)
// each, train the rest.
Split split_indices(std::size_t n, std::uint64_t seed);

// First k entries of a seeded permutation of the pool, so smaller sizes are
// prefixes of larger ones.
std::vector<std::size_t> nested_subsample(const std::vector<std::size_t>& pool, std::size_t k, std::uint64_t seed);

struct RunRecord {
  std::string protocol;
  std::string config_hash;
  nlohmann::ordered_json config;
  nlohmann::ordered_json results;
  std::vector<std::pair<std::string, double>> timing;  // seconds per stage
  std::string report;                                  // human-readable tables

  nlohmann::ordered_json to_json(bool with_timing = true) const;
  // Serialization with timing removed; equal across repeated runs.
  std::string metrics_fingerprint() const;
};

RunRecord run_weak_train(const ExperimentConfig& config);
RunRecord run_transfer_comparison(const ExperimentConfig& config);
RunRecord run_size_ablation(const ExperimentConfig& config);
RunRecord run_timing(const ExperimentConfig& config);
// Dispatches on config.protocol.
RunRecord run(const ExperimentConfig& config);

// Writes record.json and report.txt into config.output_dir (if set).
void write_record(const RunRecord& record, const std::string& output_dir);

}  // namespace soapseg::harness
