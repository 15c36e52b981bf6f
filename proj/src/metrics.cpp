#include "soapseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <json.hpp>
#include <numeric>
#include <sstream>

namespace soapseg::metrics {

namespace {

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

const ClassScores& EvalReport::scores(SoapLabel label) const {
  for (const auto& c : per_class) {
    if (c.label == label) return c;
  }
  throw ContractError("label " + std::string(display_name(label)) + " not in report");
}

std::string EvalReport::to_table(const std::string& row_name) const {
  std::ostringstream os;
  os << std::left << std::setw(12) << "" << std::right;
  for (SoapLabel l : labels) os << std::setw(8) << display_name(l);
  os << std::setw(12) << "Macro Avg." << "\n";
  auto row = [&](const std::string& name, auto field) {
    os << std::left << std::setw(12) << name << std::right << std::fixed << std::setprecision(2);
    for (const auto& c : per_class) os << std::setw(8) << 100.0 * field(c);
    if (name == row_name) {
      os << std::setw(12) << 100.0 * macro_f1;
    }
    os << "\n";
  };
  row("Precision", [](const ClassScores& c) { return c.precision; });
  row("Recall", [](const ClassScores& c) { return c.recall; });
  row(row_name, [](const ClassScores& c) { return c.f1; });
  return os.str();
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json obj;
  nlohmann::ordered_json classes = nlohmann::ordered_json::object();
  for (const auto& c : per_class) {
    classes[std::string(display_name(c.label))] = {
        {"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1}, {"support", c.support},
        {"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}};
  }
  obj["per_class"] = std::move(classes);
  obj["macro_f1"] = macro_f1;
  nlohmann::ordered_json names = nlohmann::ordered_json::array();
  for (SoapLabel l : labels) names.push_back(std::string(display_name(l)));
  obj["labels"] = std::move(names);
  obj["confusion"] = confusion;
  return obj.dump(2);
}

EvalReport evaluate(const std::vector<LabelSequence>& pred, const std::vector<LabelSequence>& gold,
                    const LabelScheme& scheme) {
  if (pred.size() != gold.size()) {
    throw ContractError("evaluate: " + std::to_string(pred.size()) + " predicted notes vs " +
                        std::to_string(gold.size()) + " gold notes");
  }
  const std::size_t k = scheme.size();
  EvalReport report;
  report.labels = scheme.labels();
  report.confusion.assign(k, std::vector<std::size_t>(k, 0));
  for (std::size_t n = 0; n < pred.size(); ++n) {
    if (pred[n].size() != gold[n].size()) {
      throw ContractError("evaluate: note " + std::to_string(n) + " has " + std::to_string(pred[n].size()) +
                          " predicted vs " + std::to_string(gold[n].size()) + " gold labels");
    }
    for (std::size_t i = 0; i < pred[n].size(); ++i) {
      const auto g = static_cast<std::size_t>(scheme.index_of(scheme.project(gold[n][i])));
      const auto p = static_cast<std::size_t>(scheme.index_of(scheme.project(pred[n][i])));
      ++report.confusion[g][p];
    }
  }
  double f1_sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    ClassScores s;
    s.label = scheme.labels()[c];
    s.tp = report.confusion[c][c];
    for (std::size_t o = 0; o < k; ++o) {
      if (o == c) continue;
      s.fn += report.confusion[c][o];
      s.fp += report.confusion[o][c];
    }
    s.support = s.tp + s.fn;
    s.precision = safe_div(static_cast<double>(s.tp), static_cast<double>(s.tp + s.fp));
    s.recall = safe_div(static_cast<double>(s.tp), static_cast<double>(s.tp + s.fn));
    s.f1 = safe_div(2.0 * s.precision * s.recall, s.precision + s.recall);
    f1_sum += s.f1;
    report.per_class.push_back(s);
  }
  report.macro_f1 = k == 0 ? 0.0 : f1_sum / static_cast<double>(k);
  return report;
}

double cohen_kappa(const LabelSequence& a, const LabelSequence& b) {
  if (a.size() != b.size()) throw ContractError("cohen_kappa: sequences differ in length");
  if (a.empty()) throw ContractError("cohen_kappa: empty sequences");
  const double n = static_cast<double>(a.size());
  std::map<SoapLabel, double> count_a, count_b;
  double agree = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    count_a[a[i]] += 1.0;
    count_b[b[i]] += 1.0;
    if (a[i] == b[i]) agree += 1.0;
  }
  const double p_o = agree / n;
  double p_e = 0.0;
  for (const auto& [label, ca] : count_a) {
    auto it = count_b.find(label);
    if (it != count_b.end()) p_e += (ca / n) * (it->second / n);
  }
  if (p_e == 1.0) return a == b ? 1.0 : 0.0;
  return (p_o - p_e) / (1.0 - p_e);
}

std::vector<double> average_ranks(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

RankCorrelation spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ContractError("spearman_rho: sequences differ in length");
  if (x.size() < 2) throw ContractError("spearman_rho: need at least two observations");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double mx = mean(rx), my = mean(ry);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return {0.0, true};
  return {sxy / std::sqrt(sxx * syy), false};
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

namespace {

// Lentz continued fraction for the incomplete beta function.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  // The fraction converges fast for x < (a+1)/(a+b+2); use the symmetry otherwise.
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
  if (std::isinf(t)) return 0.0;
  if (std::isnan(t) || df <= 0.0) return 1.0;
  const double x = df / (df + t * t);
  return std::clamp(incomplete_beta(df / 2.0, 0.5, x), 0.0, 1.0);
}

StatResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) throw ContractError("welch_t_test: each sample needs at least two values");
  StatResult r;
  r.n_a = a.size();
  r.n_b = b.size();
  const double ma = mean(a), mb = mean(b);
  const double va = sample_stddev(a) * sample_stddev(a);
  const double vb = sample_stddev(b) * sample_stddev(b);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double se2 = va / na + vb / nb;
  if (se2 == 0.0) {
    if (ma == mb) {
      r.statistic = 0.0;
      r.p_value = 1.0;
    } else {
      r.statistic = ma > mb ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
      r.p_value = 0.0;
    }
    r.df = na + nb - 2.0;
    return r;
  }
  r.statistic = (ma - mb) / std::sqrt(se2);
  const double qa = va / na, qb = vb / nb;
  r.df = se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
  r.p_value = student_t_two_sided_p(r.statistic, r.df);
  return r;
}

}  // namespace soapseg::metrics
