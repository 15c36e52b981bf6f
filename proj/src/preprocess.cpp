#include "soapseg/preprocess.hpp"

#include <array>

#include "embedded_data.hpp"
#include "util.hpp"

namespace soapseg::preprocess {

using detail::is_ascii_alnum;
using detail::is_blank;
using detail::is_space;
using detail::trim;

namespace {

constexpr std::array<std::pair<std::string_view, SoapLabel>, 4> kCanonical{{
    {"SUBJECTIVE", SoapLabel::Subjective},
    {"OBJECTIVE", SoapLabel::Objective},
    {"ASSESSMENT", SoapLabel::Assessment},
    {"PLAN", SoapLabel::Plan},
}};

bool is_header_char(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '&' || c == '/' || is_blank(c);
}

// Length of the span before the colon when the text starts with a header, else npos.
std::size_t header_span(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size() && is_header_char(text[i])) ++i;
  if (i == 0 || i >= text.size() || text[i] != ':') return std::string_view::npos;
  std::string_view candidate = trim(text.substr(0, i));
  if (candidate.empty() || candidate.size() > kMaxHeaderLength) return std::string_view::npos;
  return i;
}

std::set<std::string> parse_word_list(std::string_view text) {
  std::set<std::string> out;
  for (std::string_view line : detail::split_lines(text)) {
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    out.insert(detail::to_lower(line));
  }
  return out;
}

}  // namespace

HeaderLexicon::HeaderLexicon() {
  for (const auto& [name, label] : kCanonical) entries_.emplace(std::string(name), label);
}

HeaderLexicon HeaderLexicon::defaults() {
  static const HeaderLexicon lexicon = parse(embedded::default_lexicon(), "<default lexicon>");
  return lexicon;
}

HeaderLexicon HeaderLexicon::load(const std::string& path) {
  return parse(detail::read_file(path), path);
}

HeaderLexicon HeaderLexicon::parse(std::string_view text, const std::string& origin) {
  HeaderLexicon lex;
  int line_no = 0;
  for (std::string_view line : detail::split_lines(text)) {
    ++line_no;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw ParseError(origin + ":" + std::to_string(line_no) + ": expected HEADER<TAB>LABEL");
    }
    std::string_view header = line.substr(0, tab);
    std::string_view label_name = trim(line.substr(tab + 1));
    auto label = label_from_display(label_name);
    if (!label) {
      throw ParseError(origin + ":" + std::to_string(line_no) + ": unknown label '" +
                       std::string(label_name) + "'");
    }
    if (normalize_header_key(header).empty()) {
      throw ParseError(origin + ":" + std::to_string(line_no) + ": empty header");
    }
    lex.add(header, *label);
  }
  return lex;
}

void HeaderLexicon::add(std::string_view header, SoapLabel label) {
  std::string key = normalize_header_key(header);
  if (auto canon = canonical(key); canon && *canon != label) {
    throw ValidationError("canonical header " + key + " cannot be remapped to " +
                          std::string(display_name(label)));
  }
  entries_[key] = label;
}

std::optional<SoapLabel> HeaderLexicon::lookup(std::string_view header) const {
  auto it = entries_.find(normalize_header_key(header));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::optional<SoapLabel> HeaderLexicon::canonical(std::string_view header) {
  std::string key = normalize_header_key(header);
  for (const auto& [name, label] : kCanonical) {
    if (key == name) return label;
  }
  return std::nullopt;
}

const AbbreviationList& AbbreviationList::defaults() {
  static const AbbreviationList list(parse_word_list(embedded::default_abbreviations()));
  return list;
}

AbbreviationList AbbreviationList::load(const std::string& path) {
  return AbbreviationList(parse_word_list(detail::read_file(path)));
}

bool AbbreviationList::contains(std::string_view word) const {
  return words_.count(detail::to_lower(word)) > 0;
}

std::string normalize_header_key(std::string_view header) {
  std::string_view s = trim(header);
  if (!s.empty() && s.back() == ':') s = trim(s.substr(0, s.size() - 1));
  return detail::to_upper(s);
}

std::string normalize(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    bool collapsible = static_cast<unsigned char>(c) < 0x80 && !is_ascii_alnum(c) && !is_space(c);
    if (collapsible && !out.empty() && out.back() == c && i > 0 && text[i - 1] == c) continue;
    out.push_back(c);
  }
  // Header uppercasing is applied per line so multi-line input stays anchored.
  std::size_t line_start = 0;
  while (line_start <= out.size()) {
    std::size_t line_end = out.find('\n', line_start);
    if (line_end == std::string::npos) line_end = out.size();
    std::size_t span = header_span(std::string_view(out).substr(line_start, line_end - line_start));
    if (span != std::string_view::npos) {
      for (std::size_t k = line_start; k < line_start + span; ++k) {
        out[k] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[k])));
      }
    }
    line_start = line_end + 1;
  }
  return out;
}

std::optional<std::string> extract_header(std::string_view paragraph_text) {
  std::size_t span = header_span(paragraph_text);
  if (span == std::string_view::npos) return std::nullopt;
  return detail::to_upper(trim(paragraph_text.substr(0, span)));
}

std::vector<std::string> split_sentences(std::string_view text, const AbbreviationList& abbreviations) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    // Absorb a run of terminators ("?!", "...").
    std::size_t end = i;
    while (end + 1 < text.size() && (text[end + 1] == '.' || text[end + 1] == '!' || text[end + 1] == '?')) ++end;
    std::size_t j = end + 1;
    if (j >= text.size() || !is_space(text[j])) {
      i = end;
      continue;
    }
    bool newline = false;
    while (j < text.size() && is_space(text[j])) {
      newline = newline || text[j] == '\n';
      ++j;
    }
    bool upper_next = j < text.size() && text[j] >= 'A' && text[j] <= 'Z';
    if (j < text.size() && !upper_next && !newline) {
      i = end;
      continue;
    }
    if (c == '.' && end == i) {
      std::size_t w = i;
      while (w > start && !is_space(text[w - 1])) --w;
      if (abbreviations.contains(text.substr(w, i - w))) {
        i = end;
        continue;
      }
    }
    std::string_view sentence = trim(text.substr(start, end + 1 - start));
    if (!sentence.empty()) out.emplace_back(sentence);
    start = end + 1;
    i = end;
  }
  std::string_view tail = trim(text.substr(std::min(start, text.size())));
  if (!tail.empty()) out.emplace_back(tail);
  if (out.empty() && !text.empty()) out.emplace_back(text);
  return out;
}

std::vector<Paragraph> split_paragraphs(const RawNote& note, const AbbreviationList& abbreviations) {
  std::vector<Paragraph> out;
  for (std::string_view line : detail::split_lines(note.text)) {
    if (trim(line).empty()) continue;
    Paragraph p;
    p.index = static_cast<int>(out.size());
    p.text = normalize(line);
    p.header = extract_header(p.text);
    p.sentences = split_sentences(p.text, abbreviations);
    out.push_back(std::move(p));
  }
  return out;
}

bool is_explicitly_structured(const std::vector<Paragraph>& paragraphs, const HeaderLexicon& lexicon,
                              StructureOptions options) {
  std::array<int, 4> first_seen{-1, -1, -1, -1};
  for (const Paragraph& p : paragraphs) {
    if (!p.header) continue;
    auto canon = HeaderLexicon::canonical(*p.header);
    if (!canon || lexicon.lookup(*p.header) != canon) continue;
    auto slot = static_cast<std::size_t>(*canon);
    if (first_seen[slot] < 0) first_seen[slot] = p.index;
  }
  for (int pos : first_seen) {
    if (pos < 0) return false;
  }
  if (options.strict_order) {
    for (std::size_t k = 1; k < first_seen.size(); ++k) {
      if (first_seen[k] < first_seen[k - 1]) return false;
    }
  }
  return true;
}

bool is_explicitly_structured(const RawNote& note, const HeaderLexicon& lexicon, StructureOptions options) {
  return is_explicitly_structured(split_paragraphs(note), lexicon, options);
}

}  // namespace soapseg::preprocess
