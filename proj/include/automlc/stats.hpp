#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "automlc/core/errors.hpp"
#include "automlc/core/matrix.hpp"

namespace automlc {

enum class Direction { maximize, minimize };

/// N datasets (rows) by k methods (columns) of one measure.
struct ResultMatrix {
  RealMatrix values;
  Direction direction = Direction::maximize;
  std::vector<std::string> methods;
  std::vector<std::string> datasets;

  std::size_t n() const { return values.rows(); }
  std::size_t k() const { return values.cols(); }

  void validate() const {
    for (double v : values.data())
      if (!std::isfinite(v)) throw std::invalid_argument("result matrix holds a non-finite entry");
    if (!methods.empty() && methods.size() != k()) throw std::invalid_argument("method names do not match the columns");
    if (!datasets.empty() && datasets.size() != n()) throw std::invalid_argument("dataset names do not match the rows");
  }
};

/// Ranks within one row, 1 = best under the direction; ties share the mean
/// of the positions they occupy.
inline std::vector<double> rank_row(std::span<const double> row, Direction dir) {
  const auto k = row.size();
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return dir == Direction::maximize ? row[a] > row[b] : row[a] < row[b];
  });
  std::vector<double> ranks(k);
  for (std::size_t i = 0; i < k;) {
    std::size_t j = i;
    while (j + 1 < k && row[idx[j + 1]] == row[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = r;
    i = j + 1;
  }
  return ranks;
}

inline std::vector<double> average_ranks(const ResultMatrix& rm) {
  rm.validate();
  if (rm.n() == 0 || rm.k() == 0) throw std::invalid_argument("average_ranks needs a non-empty matrix");
  std::vector<double> avg(rm.k(), 0.0);
  for (std::size_t i = 0; i < rm.n(); ++i) {
    auto r = rank_row(rm.values.row(i), rm.direction);
    for (std::size_t j = 0; j < rm.k(); ++j) avg[j] += r[j];
  }
  for (auto& a : avg) a /= static_cast<double>(rm.n());
  return avg;
}

// --- distributions ------------------------------------------------------------

namespace detail {

/// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_cf(double a, double b, double x) {
  constexpr double tiny = 1e-300, eps = 1e-15;
  const double qab = a + b, qap = a + 1, qam = a - 1;
  double c = 1, d = 1 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1) < eps) return h;
  }
  return h;
}

}  // namespace detail

/// Regularised incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  if (x <= 0) return 0;
  if (x >= 1) return 1;
  const double lbt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  if (x < (a + 1) / (a + b + 2)) return std::exp(lbt) * detail::beta_cf(a, b, x) / a;
  return 1 - std::exp(lbt) * detail::beta_cf(b, a, 1 - x) / b;
}

inline double f_cdf(double x, double d1, double d2) {
  if (x <= 0) return 0;
  return incomplete_beta(d1 / 2, d2 / 2, d1 * x / (d1 * x + d2));
}

/// Upper-alpha critical value of F(d1, d2), by bisection on the CDF.
inline double f_critical(double alpha, double d1, double d2) {
  if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("alpha must lie in (0,1)");
  const double target = 1 - alpha;
  double lo = 0, hi = 1;
  while (f_cdf(hi, d1, d2) < target) hi *= 2;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f_cdf(mid, d1, d2) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// --- tests -----------------------------------------------------------------------

struct FriedmanResult {
  double chi2 = 0;
  double f_id = 0;
  double critical = 0;
  double p_value = 1;
  bool reject = false;
};

/// Friedman chi-square over average ranks with the Iman-Davenport F correction.
inline FriedmanResult friedman_from_ranks(const std::vector<double>& ranks, std::size_t n_datasets, double alpha) {
  const double k = static_cast<double>(ranks.size()), n = static_cast<double>(n_datasets);
  if (ranks.size() < 2 || n_datasets < 2) throw std::invalid_argument("Friedman test needs k >= 2 and N >= 2");
  double sq = 0;
  for (double r : ranks) sq += r * r;
  FriedmanResult out;
  out.chi2 = 12 * n / (k * (k + 1)) * (sq - k * (k + 1) * (k + 1) / 4);
  if (std::abs(out.chi2) < 1e-12) out.chi2 = 0;
  const double d1 = k - 1, d2 = (k - 1) * (n - 1);
  out.critical = f_critical(alpha, d1, d2);
  const double denom = n * (k - 1) - out.chi2;
  if (denom <= 1e-12 * n * (k - 1)) {
    out.f_id = std::numeric_limits<double>::infinity();
    out.p_value = 0;
    out.reject = true;
    return out;
  }
  out.f_id = (n - 1) * out.chi2 / denom;
  out.p_value = 1 - f_cdf(out.f_id, d1, d2);
  out.reject = out.f_id > out.critical;
  return out;
}

inline FriedmanResult friedman_test(const ResultMatrix& rm, double alpha) {
  return friedman_from_ranks(average_ranks(rm), rm.n(), alpha);
}

/// Two-tailed Nemenyi critical values q_alpha for k = 2..10 (studentized
/// range statistic divided by sqrt 2).
inline double nemenyi_q(std::size_t k, double alpha) {
  static constexpr double q05[] = {1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164};
  static constexpr double q10[] = {1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920};
  if (k < 2 || k > 10) throw UnsupportedError("Nemenyi table covers 2..10 methods, got " + std::to_string(k));
  if (std::abs(alpha - 0.05) < 1e-12) return q05[k - 2];
  if (std::abs(alpha - 0.10) < 1e-12) return q10[k - 2];
  throw UnsupportedError("Nemenyi table covers alpha 0.05 and 0.10 only");
}

inline double nemenyi_cd(std::size_t k, std::size_t n, double alpha) {
  if (n == 0) throw std::invalid_argument("Nemenyi CD needs N >= 1");
  const double kk = static_cast<double>(k);
  return nemenyi_q(k, alpha) * std::sqrt(kk * (kk + 1) / (6.0 * static_cast<double>(n)));
}

/// Ordered (winner, loser) index pairs whose rank gap is at least cd
/// (up to rounding of the rank averages).
inline std::vector<std::pair<std::size_t, std::size_t>> pairwise_conclusions(const std::vector<double>& ranks, double cd) {
  for (double r : ranks)
    if (!std::isfinite(r)) throw std::invalid_argument("ranks must be finite");
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < ranks.size(); ++i)
    for (std::size_t j = 0; j < ranks.size(); ++j)
      if (i != j && ranks[i] < ranks[j] && ranks[j] - ranks[i] >= cd - 1e-12) out.emplace_back(i, j);
  return out;
}

/// Groups losers sharing the same set of winners: `{A, B} ≻ {C}`, one line per
/// group, methods listed in column order.
inline std::vector<std::string> format_conclusions(const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                                                   const std::vector<std::string>& names) {
  std::map<std::size_t, std::vector<std::size_t>> winners_of;
  for (auto [w, l] : pairs) winners_of[l].push_back(w);
  std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> groups;
  for (auto& [loser, winners] : winners_of) {
    std::sort(winners.begin(), winners.end());
    auto it = std::find_if(groups.begin(), groups.end(), [&](auto& g) { return g.first == winners; });
    if (it == groups.end()) groups.push_back({winners, {loser}});
    else it->second.push_back(loser);
  }
  auto join = [&](const std::vector<std::size_t>& v) {
    std::string s = "{";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + names.at(v[i]);
    return s + "}";
  };
  std::vector<std::string> lines;
  for (auto& [w, l] : groups) lines.push_back(join(w) + " ≻ " + join(l));
  return lines;
}

// --- report --------------------------------------------------------------------------

struct StatsReport {
  std::string measure;
  double alpha = 0.05;
  std::vector<std::string> methods;
  std::vector<double> average_values;
  std::vector<double> average_ranks;
  std::size_t datasets = 0;
  std::optional<FriedmanResult> friedman;
  std::optional<double> cd;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<std::string> conclusions;
  std::vector<std::string> notes;

  nlohmann::json to_json() const {
    nlohmann::json j{{"measure", measure},      {"alpha", alpha},
                     {"methods", methods},      {"average_values", average_values},
                     {"average_ranks", average_ranks}, {"datasets", datasets},
                     {"conclusions", conclusions},     {"notes", notes}};
    if (friedman) {
      j["chi2_F"] = friedman->chi2;
      j["F_ID"] = std::isfinite(friedman->f_id) ? nlohmann::json(friedman->f_id) : nlohmann::json("inf");
      j["F_critical"] = friedman->critical;
      j["p_value"] = friedman->p_value;
      j["reject"] = friedman->reject;
    }
    if (cd) j["critical_difference"] = *cd;
    return j;
  }

  std::string to_text() const {
    std::ostringstream os;
    os << "# Friedman test with Iman-Davenport correction; Nemenyi post-hoc (q table, two-tailed)\n";
    os << "measure: " << measure << "\nalpha: " << alpha << "\ndatasets: " << datasets << "\n";
    os << "method\tavg_value\tavg_rank\n";
    for (std::size_t j = 0; j < methods.size(); ++j)
      os << methods[j] << '\t' << average_values[j] << '\t' << average_ranks[j] << '\n';
    if (friedman) {
      os << "chi2_F: " << friedman->chi2 << "\nF_ID: " << friedman->f_id << "\nF_critical: " << friedman->critical
         << "\np_value: " << friedman->p_value << "\nreject: " << (friedman->reject ? "yes" : "no") << '\n';
    }
    if (cd) os << "critical_difference: " << *cd << '\n';
    os << "comparison:";
    if (conclusions.empty()) os << " no differences among all methods";
    os << '\n';
    for (auto& c : conclusions) os << "  " << c << '\n';
    for (auto& n : notes) os << "note: " << n << '\n';
    return os.str();
  }
};

/// The full rank-based protocol on one measure. Degenerate shapes (one method
/// or one dataset) produce a report with a note and no tests.
inline StatsReport analyse(const ResultMatrix& rm, std::string measure, double alpha) {
  rm.validate();
  StatsReport r;
  r.measure = std::move(measure);
  r.alpha = alpha;
  r.methods = rm.methods;
  r.datasets = rm.n();
  r.average_values.assign(rm.k(), 0.0);
  for (std::size_t i = 0; i < rm.n(); ++i)
    for (std::size_t j = 0; j < rm.k(); ++j) r.average_values[j] += rm.values(i, j) / static_cast<double>(rm.n());
  if (rm.n() == 0 || rm.k() == 0) {
    r.notes.push_back("empty result matrix");
    return r;
  }
  r.average_ranks = average_ranks(rm);
  if (rm.k() < 2) {
    r.notes.push_back("fewer than two methods: no tests performed");
    return r;
  }
  if (rm.n() < 2) {
    r.notes.push_back("fewer than two datasets: no tests performed");
    return r;
  }
  r.friedman = friedman_from_ranks(r.average_ranks, rm.n(), alpha);
  if (!r.friedman->reject) r.notes.push_back("Friedman test does not reject equal performance; pairwise calls are indicative only");
  if (rm.k() > 10) {
    r.notes.push_back("more than ten methods: Nemenyi table not available");
    return r;
  }
  r.cd = nemenyi_cd(rm.k(), rm.n(), alpha);
  r.pairs = pairwise_conclusions(r.average_ranks, *r.cd);
  r.conclusions = format_conclusions(r.pairs, r.methods);
  return r;
}

}  // namespace automlc
