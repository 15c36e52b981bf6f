#include "soapseg/topicseg.hpp"

#include <cmath>
#include <map>

#include "embedded_data.hpp"
#include "util.hpp"

namespace soapseg::topicseg {

namespace {

std::set<std::string> parse_words(std::string_view text) {
  std::set<std::string> out;
  for (std::string_view line : detail::split_lines(text)) {
    line = detail::trim(line);
    if (!line.empty() && line.front() != '#') out.insert(detail::to_lower(line));
  }
  return out;
}

std::map<std::string, double> term_counts(const Paragraph& p, const StopwordList& stopwords) {
  std::map<std::string, double> counts;
  for (auto& w : detail::word_tokens(p.text)) {
    if (!stopwords.contains(w)) counts[w] += 1.0;
  }
  return counts;
}

double cosine(const std::map<std::string, double>& a, const std::map<std::string, double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [w, c] : a) {
    na += c * c;
    if (auto it = b.find(w); it != b.end()) dot += c * it->second;
  }
  for (const auto& [w, c] : b) nb += c * c;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

}  // namespace

const StopwordList& StopwordList::defaults() {
  static const StopwordList list(parse_words(embedded::default_stopwords()));
  return list;
}

StopwordList StopwordList::load(const std::string& path) {
  return StopwordList(parse_words(detail::read_file(path)));
}

std::vector<double> adjacent_similarities(const std::vector<Paragraph>& paragraphs,
                                          const StopwordList& stopwords) {
  std::vector<std::map<std::string, double>> vectors;
  vectors.reserve(paragraphs.size());
  for (const auto& p : paragraphs) vectors.push_back(term_counts(p, stopwords));
  std::vector<double> sims;
  for (std::size_t i = 1; i < vectors.size(); ++i) sims.push_back(cosine(vectors[i - 1], vectors[i]));
  return sims;
}

TopicFlags segment(const std::vector<Paragraph>& paragraphs, ThresholdPolicy policy,
                   const StopwordList& stopwords) {
  TopicFlags flags(paragraphs.size(), false);
  if (paragraphs.size() < 2) return flags;

  std::vector<double> sims = adjacent_similarities(paragraphs, stopwords);
  double mean = 0.0;
  for (double s : sims) mean += s;
  mean /= static_cast<double>(sims.size());
  double var = 0.0;
  for (double s : sims) var += (s - mean) * (s - mean);
  double stddev = std::sqrt(var / static_cast<double>(sims.size()));

  bool all_equal = true;
  for (double s : sims) all_equal = all_equal && s == sims.front();

  // A single pair has no spread to measure against; fall back to "any shared term".
  if (sims.size() == 1) {
    flags[1] = sims.front() > 0.0;
    return flags;
  }
  if (all_equal) {
    for (std::size_t i = 1; i < flags.size(); ++i) flags[i] = true;
    return flags;
  }
  double tau = mean - policy.depth_factor * stddev;
  for (std::size_t i = 1; i < flags.size(); ++i) flags[i] = sims[i - 1] >= tau;
  return flags;
}

}  // namespace soapseg::topicseg
