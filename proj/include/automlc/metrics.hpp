#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "automlc/core/matrix.hpp"
#include "automlc/core/text.hpp"

namespace automlc {

struct MetricsReport {
  double em = 0;
  double hl = 1;
  double fm = 0;
  double rl = 1;
  double fitness = 0;
  std::size_t n_rl_skipped = 0;

  static std::vector<std::string> csv_header() { return {"em", "hl", "fm", "rl", "fitness", "n_rl_skipped"}; }
  std::vector<std::string> csv_fields() const {
    return {text::format_real(em), text::format_real(hl), text::format_real(fm),
            text::format_real(rl), text::format_real(fitness), std::to_string(n_rl_skipped)};
  }

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

namespace detail {

template <class A, class B>
void require_same_shape(const Matrix<A>& a, const Matrix<B>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("shape mismatch: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  if (a.rows() == 0 || a.cols() == 0) throw std::invalid_argument("metrics need a non-empty matrix");
}

}  // namespace detail

inline double exact_match(const BinaryMatrix& pred, const BinaryMatrix& truth) {
  detail::require_same_shape(pred, truth);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.rows(); ++i) {
    auto a = pred.row(i), b = truth.row(i);
    hits += std::equal(a.begin(), a.end(), b.begin());
  }
  return static_cast<double>(hits) / static_cast<double>(pred.rows());
}

inline double hamming_loss(const BinaryMatrix& pred, const BinaryMatrix& truth) {
  detail::require_same_shape(pred, truth);
  std::size_t diff = 0;
  for (std::size_t i = 0; i < pred.data().size(); ++i) diff += pred.data()[i] != truth.data()[i];
  return static_cast<double>(diff) / static_cast<double>(pred.data().size());
}

/// Macro F1 over labels; a label with no positives in either matrix scores 0.
inline double f1_macro_label(const BinaryMatrix& pred, const BinaryMatrix& truth) {
  detail::require_same_shape(pred, truth);
  double sum = 0;
  for (std::size_t j = 0; j < pred.cols(); ++j) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.rows(); ++i) {
      const bool p = pred(i, j), t = truth(i, j);
      tp += p && t;
      fp += p && !t;
      fn += !p && t;
    }
    const auto denom = 2 * tp + fp + fn;
    sum += denom ? 2.0 * static_cast<double>(tp) / static_cast<double>(denom) : 0.0;
  }
  return sum / static_cast<double>(pred.cols());
}

struct RankingLoss {
  double value = 0;
  std::size_t skipped = 0;
};

/// Mis-ordered (relevant, irrelevant) pairs per example, ties count one half.
/// Examples whose truth row is all-relevant or all-irrelevant are skipped;
/// if every example is skipped the loss is 0.
inline RankingLoss ranking_loss(const RealMatrix& scores, const BinaryMatrix& truth) {
  detail::require_same_shape(scores, truth);
  RankingLoss out;
  double sum = 0;
  std::size_t counted = 0;
  std::vector<double> rel, irr;
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    rel.clear();
    irr.clear();
    for (std::size_t j = 0; j < scores.cols(); ++j) (truth(i, j) ? rel : irr).push_back(scores(i, j));
    if (rel.empty() || irr.empty()) {
      ++out.skipped;
      continue;
    }
    double bad = 0;
    for (double r : rel)
      for (double s : irr) bad += s > r ? 1.0 : (s == r ? 0.5 : 0.0);
    sum += bad / static_cast<double>(rel.size() * irr.size());
    ++counted;
  }
  out.value = counted ? sum / static_cast<double>(counted) : 0.0;
  return out;
}

/// (EM + (1 - HL) + FM + (1 - RL)) / 4.
inline double fitness(double em, double hl, double fm, double rl) {
  for (double v : {em, hl, fm, rl})
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("fitness inputs must lie in [0,1]");
  return (em + (1.0 - hl) + fm + (1.0 - rl)) / 4.0;
}

inline MetricsReport evaluate_predictions(const BinaryMatrix& pred, const RealMatrix& scores, const BinaryMatrix& truth) {
  MetricsReport r;
  r.em = exact_match(pred, truth);
  r.hl = hamming_loss(pred, truth);
  r.fm = f1_macro_label(pred, truth);
  auto rl = ranking_loss(scores, truth);
  r.rl = rl.value;
  r.n_rl_skipped = rl.skipped;
  r.fitness = fitness(r.em, r.hl, r.fm, r.rl);
  return r;
}

}  // namespace automlc
