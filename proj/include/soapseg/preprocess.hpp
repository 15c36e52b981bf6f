#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "soapseg/types.hpp"

namespace soapseg::preprocess {

// Header candidates longer than this (after trimming) are treated as prose.
inline constexpr std::size_t kMaxHeaderLength = 60;

// Uppercased header -> label. The four canonical headers are always present.
class HeaderLexicon {
 public:
  HeaderLexicon();

  // Built-in lexicon: canonical headers plus the shipped synonyms.
  static HeaderLexicon defaults();
  // Two-column UTF-8 text, HEADER<TAB>LABEL. Blank lines and '#' comments
  // are skipped. LABEL is a display name (S, O, A, P, Out, A&P).
  static HeaderLexicon load(const std::string& path);
  static HeaderLexicon parse(std::string_view text, const std::string& origin = "<memory>");

  // Keys are normalized (trimmed, colon-stripped, uppercased) on insert.
  void add(std::string_view header, SoapLabel label);
  std::optional<SoapLabel> lookup(std::string_view header) const;
  const std::map<std::string, SoapLabel>& entries() const { return entries_; }

  static std::optional<SoapLabel> canonical(std::string_view header);

 private:
  std::map<std::string, SoapLabel> entries_;
};

class AbbreviationList {
 public:
  AbbreviationList() = default;
  explicit AbbreviationList(std::set<std::string> lowercase_words)
      : words_(std::move(lowercase_words)) {}

  static const AbbreviationList& defaults();
  static AbbreviationList load(const std::string& path);

  bool contains(std::string_view word) const;

 private:
  std::set<std::string> words_;
};

std::string normalize_header_key(std::string_view header);

// Collapses runs of a repeated ASCII punctuation character and uppercases the
// header span of a header-led line.
std::string normalize(std::string_view text);

// Anchored ^[A-Za-z&/ \t]+: on a single line; returns the uppercased,
// trimmed header without its colon.
std::optional<std::string> extract_header(std::string_view paragraph_text);

std::vector<std::string> split_sentences(std::string_view paragraph_text,
                                         const AbbreviationList& abbreviations = AbbreviationList::defaults());

// Newline split, blank lines dropped, each line normalized, header extracted
// and sentences split. Indices are consecutive from 0.
std::vector<Paragraph> split_paragraphs(const RawNote& note,
                                        const AbbreviationList& abbreviations = AbbreviationList::defaults());

struct StructureOptions {
  // Additionally require the first canonical headers to appear in S, O, A, P order.
  bool strict_order = false;
};

bool is_explicitly_structured(const std::vector<Paragraph>& paragraphs, const HeaderLexicon& lexicon,
                              StructureOptions options = {});
bool is_explicitly_structured(const RawNote& note, const HeaderLexicon& lexicon,
                              StructureOptions options = {});

}  // namespace soapseg::preprocess
