#include "crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace soapseg::tagger::crf {

namespace {

double log_sum_exp(const double* v, int n) {
  double m = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) m = std::max(m, v[i]);
  if (std::isinf(m)) return m;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

void check_labels(const View& crf, const Matrix& scores, const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != scores.rows()) {
    throw ContractError("CRF: " + std::to_string(labels.size()) + " labels for " + std::to_string(scores.rows()) +
                        " score rows");
  }
  for (int y : labels) {
    if (y < 0 || y >= crf.num_labels()) {
      throw ContractError("CRF: label index " + std::to_string(y) + " out of range [0, " +
                          std::to_string(crf.num_labels()) + ")");
    }
  }
}

void check_scores(const View& crf, const Matrix& scores) {
  if (scores.rows() < 1) throw ContractError("CRF: empty score matrix");
  if (scores.cols() != crf.num_labels()) {
    throw ContractError("CRF: score matrix has " + std::to_string(scores.cols()) + " columns, expected " +
                        std::to_string(crf.num_labels()));
  }
}

// alpha(i, k): log-sum over prefixes ending in k at step i (emission included).
Matrix forward_table(const View& crf, const Matrix& s) {
  const int n = static_cast<int>(s.rows()), k = crf.num_labels();
  Matrix alpha(n, k);
  for (int j = 0; j < k; ++j) alpha(0, j) = crf.start(j, 0) + s(0, j);
  std::vector<double> buf(static_cast<std::size_t>(k));
  for (int i = 1; i < n; ++i) {
    for (int to = 0; to < k; ++to) {
      for (int from = 0; from < k; ++from) buf[static_cast<std::size_t>(from)] = alpha(i - 1, from) + crf.transitions(from, to);
      alpha(i, to) = log_sum_exp(buf.data(), k) + s(i, to);
    }
  }
  return alpha;
}

// beta(i, k): log-sum over suffixes after step i given label k at i (stop included).
Matrix backward_table(const View& crf, const Matrix& s) {
  const int n = static_cast<int>(s.rows()), k = crf.num_labels();
  Matrix beta(n, k);
  for (int j = 0; j < k; ++j) beta(n - 1, j) = crf.stop(j, 0);
  std::vector<double> buf(static_cast<std::size_t>(k));
  for (int i = n - 2; i >= 0; --i) {
    for (int from = 0; from < k; ++from) {
      for (int to = 0; to < k; ++to) {
        buf[static_cast<std::size_t>(to)] = crf.transitions(from, to) + s(i + 1, to) + beta(i + 1, to);
      }
      beta(i, from) = log_sum_exp(buf.data(), k);
    }
  }
  return beta;
}

double final_log_z(const View& crf, const Matrix& alpha) {
  const int n = static_cast<int>(alpha.rows()), k = crf.num_labels();
  std::vector<double> buf(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) buf[static_cast<std::size_t>(j)] = alpha(n - 1, j) + crf.stop(j, 0);
  return log_sum_exp(buf.data(), k);
}

}  // namespace

double sequence_score(const View& crf, const Matrix& scores, const std::vector<int>& labels) {
  check_scores(crf, scores);
  check_labels(crf, scores, labels);
  const std::size_t n = labels.size();
  double total = crf.start(labels[0], 0) + crf.stop(labels[n - 1], 0);
  for (std::size_t i = 0; i < n; ++i) total += scores(static_cast<Eigen::Index>(i), labels[i]);
  for (std::size_t i = 0; i + 1 < n; ++i) total += crf.transitions(labels[i], labels[i + 1]);
  return total;
}

double log_partition(const View& crf, const Matrix& scores) {
  check_scores(crf, scores);
  return final_log_z(crf, forward_table(crf, scores));
}

std::vector<int> viterbi(const View& crf, const Matrix& scores) {
  check_scores(crf, scores);
  const int n = static_cast<int>(scores.rows()), k = crf.num_labels();
  Matrix delta(n, k);
  Eigen::MatrixXi back(n, k);
  for (int j = 0; j < k; ++j) delta(0, j) = crf.start(j, 0) + scores(0, j);
  for (int i = 1; i < n; ++i) {
    for (int to = 0; to < k; ++to) {
      int best = 0;
      double best_val = delta(i - 1, 0) + crf.transitions(0, to);
      for (int from = 1; from < k; ++from) {
        const double v = delta(i - 1, from) + crf.transitions(from, to);
        if (v > best_val) {
          best_val = v;
          best = from;
        }
      }
      delta(i, to) = best_val + scores(i, to);
      back(i, to) = best;
    }
  }
  int last = 0;
  double best_val = delta(n - 1, 0) + crf.stop(0, 0);
  for (int j = 1; j < k; ++j) {
    const double v = delta(n - 1, j) + crf.stop(j, 0);
    if (v > best_val) {
      best_val = v;
      last = j;
    }
  }
  std::vector<int> path(static_cast<std::size_t>(n));
  path[static_cast<std::size_t>(n - 1)] = last;
  for (int i = n - 1; i > 0; --i) path[static_cast<std::size_t>(i - 1)] = back(i, path[static_cast<std::size_t>(i)]);
  return path;
}

double nll_and_gradients(const View& crf, const Matrix& scores, const std::vector<int>& labels, Matrix& d_scores,
                         Matrix& d_transitions, Matrix& d_start, Matrix& d_stop) {
  check_scores(crf, scores);
  check_labels(crf, scores, labels);
  const int n = static_cast<int>(scores.rows()), k = crf.num_labels();
  const Matrix alpha = forward_table(crf, scores);
  const Matrix beta = backward_table(crf, scores);
  const double log_z = final_log_z(crf, alpha);
  const double gold = sequence_score(crf, scores, labels);

  d_scores.resize(n, k);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) d_scores(i, j) = std::exp(alpha(i, j) + beta(i, j) - log_z);
  }
  for (int j = 0; j < k; ++j) {
    d_start(j, 0) += d_scores(0, j);
    d_stop(j, 0) += d_scores(n - 1, j);
  }
  for (int i = 0; i + 1 < n; ++i) {
    for (int from = 0; from < k; ++from) {
      for (int to = 0; to < k; ++to) {
        d_transitions(from, to) +=
            std::exp(alpha(i, from) + crf.transitions(from, to) + scores(i + 1, to) + beta(i + 1, to) - log_z);
      }
    }
  }
  for (int i = 0; i < n; ++i) d_scores(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
  d_start(labels.front(), 0) -= 1.0;
  d_stop(labels.back(), 0) -= 1.0;
  for (int i = 0; i + 1 < n; ++i) d_transitions(labels[static_cast<std::size_t>(i)], labels[static_cast<std::size_t>(i + 1)]) -= 1.0;
  return log_z - gold;
}

}  // namespace soapseg::tagger::crf
