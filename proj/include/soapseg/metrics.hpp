#pragma once

#include <string>
#include <vector>

#include "soapseg/types.hpp"

namespace soapseg::metrics {

using LabelSequence = std::vector<SoapLabel>;

struct ClassScores {
  SoapLabel label{};
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;  // gold count
  std::size_t tp = 0, fp = 0, fn = 0;
};

struct EvalReport {
  std::vector<SoapLabel> labels;           // scheme order
  std::vector<ClassScores> per_class;      // same order
  double macro_f1 = 0.0;
  std::vector<std::vector<std::size_t>> confusion;  // [gold][pred]

  const ClassScores& scores(SoapLabel label) const;
  // Table layout: one column per label then "Macro Avg.", values in percent.
  std::string to_table(const std::string& row_name = "F1") const;
  std::string to_json() const;
};

// Paragraph-level scoring over the fixed label set. Labels outside the scheme
// are projected into it (A, P -> A&P for the merged scheme). Throws
// ContractError on a note count or per-note length mismatch.
EvalReport evaluate(const std::vector<LabelSequence>& pred, const std::vector<LabelSequence>& gold,
                    const LabelScheme& scheme);

double cohen_kappa(const LabelSequence& a, const LabelSequence& b);

struct RankCorrelation {
  double rho = 0.0;
  bool degenerate = false;  // one side constant
};

RankCorrelation spearman_rho(const std::vector<double>& x, const std::vector<double>& y);

// Mid-ranks (1-based), ties share their mean rank.
std::vector<double> average_ranks(const std::vector<double>& values);

struct StatResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double df = 0.0;
  std::size_t n_a = 0, n_b = 0;
};

StatResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b);

// Regularized incomplete beta I_x(a, b) by continued fraction.
double incomplete_beta(double a, double b, double x);
// Two-sided tail probability P(|T| >= |t|) for Student's t with df degrees of freedom.
double student_t_two_sided_p(double t, double df);

double mean(const std::vector<double>& v);
// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double sample_stddev(const std::vector<double>& v);

}  // namespace soapseg::metrics
