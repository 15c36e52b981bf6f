#pragma once

#include <set>
#include <string>
#include <vector>

#include "soapseg/types.hpp"

namespace soapseg::topicseg {

class StopwordList {
 public:
  StopwordList() = default;
  explicit StopwordList(std::set<std::string> words) : words_(std::move(words)) {}

  static const StopwordList& defaults();
  // Plain text, one word per line.
  static StopwordList load(const std::string& path);

  bool contains(const std::string& lowercase_word) const { return words_.count(lowercase_word) > 0; }

 private:
  std::set<std::string> words_;
};

// Boundary threshold over the adjacent-pair cosine profile.
struct ThresholdPolicy {
  // tau = mean - depth_factor * stddev
  double depth_factor = 0.5;
};

// flags[i] is true iff paragraph i continues the topic of paragraph i-1;
// flags[0] is always false.
using TopicFlags = std::vector<bool>;

// Cosine similarity of the lowercased, stopword-filtered unigram count
// vectors of each adjacent pair.
std::vector<double> adjacent_similarities(const std::vector<Paragraph>& paragraphs,
                                          const StopwordList& stopwords = StopwordList::defaults());

TopicFlags segment(const std::vector<Paragraph>& paragraphs, ThresholdPolicy policy = {},
                   const StopwordList& stopwords = StopwordList::defaults());

}  // namespace soapseg::topicseg
