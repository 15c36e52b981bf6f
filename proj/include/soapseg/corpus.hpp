#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "soapseg/types.hpp"

namespace soapseg::corpus {

// ---- JSONL I/O -------------------------------------------------------------
//
// One object per line: {"id", "text", "source_tag", "labels"?, "provenance"?,
// "topic_flags"?}. Labels use display names. Fields are always written in
// that order.

using Corpus = std::variant<std::vector<RawNote>, std::vector<LabeledNote>>;

// A file is labeled when its first record carries "labels"; every record must
// then agree. Empty files read as an empty raw corpus.
Corpus read_corpus(const std::string& path);
std::vector<RawNote> read_raw_corpus(const std::string& path);
std::vector<LabeledNote> read_labeled_corpus(const std::string& path);

// Parses JSONL held in memory; `origin` prefixes error messages.
Corpus parse_corpus(std::string_view jsonl, const std::string& origin = "<memory>");

void write_corpus(const std::vector<RawNote>& notes, const std::string& path);
void write_corpus(const std::vector<LabeledNote>& notes, const std::string& path);
std::string to_jsonl(const std::vector<RawNote>& notes);
std::string to_jsonl(const std::vector<LabeledNote>& notes);

std::vector<RawNote> raw_notes(const std::vector<LabeledNote>& notes);

// ---- Synthetic generator ---------------------------------------------------

struct GeneratorConfig {
  std::string style_id;
  // Section label -> header strings. A section appears in the generated note
  // iff it has a header pool; sections are emitted in S, O, A, P (A&P) order.
  // The Out pool supplies headers for trailing signature paragraphs.
  std::map<SoapLabel, std::vector<std::string>> header_pools;
  std::map<SoapLabel, std::vector<std::string>> vocab_pools;
  double section_omission_prob = 0.0;
  double list_format_prob = 0.2;
  std::pair<int, int> paragraphs_per_section{1, 3};
  std::pair<int, int> sentences_per_paragraph{3, 5};
  std::pair<int, int> words_per_sentence{6, 12};
  std::uint64_t seed = 1;

  // Source-hospital-like style: canonical headers, five labels.
  static GeneratorConfig style_a(std::uint64_t seed = 1);
  // Target-hospital-like style: disjoint header synonyms, merged A&P section,
  // shifted vocabulary.
  static GeneratorConfig style_b(std::uint64_t seed = 1);
  // "styleA" | "styleB"
  static GeneratorConfig builtin(const std::string& style, std::uint64_t seed);

  static GeneratorConfig load(const std::string& path);
  static GeneratorConfig from_json(std::string_view json_text);
  std::string to_json() const;

  // Throws ConfigError on out-of-range probabilities or empty pools.
  void validate() const;

  std::vector<SoapLabel> sections() const;
  LabelScheme scheme() const;
};

struct GeneratedCorpus {
  std::vector<RawNote> raw;
  std::vector<LabeledNote> gold;
};

inline constexpr double kTrailingOutProb = 0.9;
inline constexpr const char* kPhiToken = "UNK";

GeneratedCorpus generate_corpus(const GeneratorConfig& config, std::size_t n);

}  // namespace soapseg::corpus
