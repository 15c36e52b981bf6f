#pragma once

#include <vector>

#include "soapseg/tagger.hpp"

// Linear-chain CRF over an n x K emission matrix, all in log space.
namespace soapseg::tagger::crf {

struct View {
  const Matrix& transitions;  // K x K, [from][to]
  const Matrix& start;        // K x 1
  const Matrix& stop;         // K x 1

  int num_labels() const { return static_cast<int>(transitions.rows()); }
};

inline View view_of(const Parameters& p) { return {p.transitions, p.start, p.stop}; }

double sequence_score(const View& crf, const Matrix& scores, const std::vector<int>& labels);
double log_partition(const View& crf, const Matrix& scores);
std::vector<int> viterbi(const View& crf, const Matrix& scores);

// Returns log Z - score(labels). Writes dLoss/dScores into d_scores (resized)
// and accumulates into the transition/start/stop gradients.
double nll_and_gradients(const View& crf, const Matrix& scores, const std::vector<int>& labels, Matrix& d_scores,
                         Matrix& d_transitions, Matrix& d_start, Matrix& d_stop);

}  // namespace soapseg::tagger::crf
