#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "automlc/core/random.hpp"

namespace automlc {

/// Random-forest regressor used as the BO surrogate. Trees grow on bootstrap
/// samples and draw a random feature subset at each split.
class RandomForestRegressor {
 public:
  struct Options {
    std::size_t trees = 10;
    std::size_t min_split = 3;
    std::size_t max_depth = 20;
    double feature_fraction = 0.5;
  };

  struct Prediction {
    double mean = 0;
    double variance = 0;
  };

  RandomForestRegressor() = default;
  explicit RandomForestRegressor(Options opt) : opt_(opt) {}

  void fit(const std::vector<std::vector<double>>& x, const std::vector<double>& y, Rng& rng) {
    if (x.empty() || x.size() != y.size()) throw std::invalid_argument("forest: need matching non-empty x and y");
    x_ = x;
    y_ = y;
    dims_ = x.front().size();
    trees_.assign(opt_.trees, {});
    const auto n = x.size();
    for (auto& tree : trees_) {
      std::vector<std::size_t> rows(n);
      for (auto& r : rows) r = uniform_index(rng, n);
      build(tree, rows, 0, rng);
    }
  }

  Prediction predict(const std::vector<double>& v) const {
    if (trees_.empty()) throw std::logic_error("forest: predict before fit");
    double sum = 0, sq = 0;
    for (const auto& t : trees_) {
      std::size_t i = 0;
      while (t[i].feature >= 0) i = v[static_cast<std::size_t>(t[i].feature)] <= t[i].threshold ? t[i].left : t[i].right;
      sum += t[i].value;
      sq += t[i].value * t[i].value;
    }
    const double k = static_cast<double>(trees_.size());
    Prediction p;
    p.mean = sum / k;
    p.variance = std::max(0.0, sq / k - p.mean * p.mean);
    return p;
  }

 private:
  struct Node {
    int feature = -1;
    double threshold = 0;
    std::size_t left = 0, right = 0;
    double value = 0;
  };
  using Tree = std::vector<Node>;

  std::size_t build(Tree& t, std::vector<std::size_t>& rows, std::size_t depth, Rng& rng) {
    const auto id = t.size();
    t.emplace_back();
    double mean = 0;
    for (auto r : rows) mean += y_[r];
    mean /= static_cast<double>(rows.size());
    t[id].value = mean;
    if (rows.size() < opt_.min_split || depth >= opt_.max_depth) return id;

    std::vector<std::size_t> features(dims_);
    std::iota(features.begin(), features.end(), 0);
    shuffle(features, rng);
    const auto take = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(opt_.feature_fraction * static_cast<double>(dims_))));
    features.resize(std::min(take, dims_));

    double best_sse = 0;
    for (auto r : rows) best_sse += (y_[r] - mean) * (y_[r] - mean);
    const double parent_sse = best_sse;
    int best_f = -1;
    double best_thr = 0;
    std::vector<std::pair<double, double>> col(rows.size());
    for (auto f : features) {
      for (std::size_t i = 0; i < rows.size(); ++i) col[i] = {x_[rows[i]][f], y_[rows[i]]};
      std::sort(col.begin(), col.end());
      double ls = 0, lq = 0, ts = 0, tq = 0;
      for (auto& [xv, yv] : col) {
        ts += yv;
        tq += yv * yv;
      }
      for (std::size_t i = 0; i + 1 < col.size(); ++i) {
        ls += col[i].second;
        lq += col[i].second * col[i].second;
        if (col[i].first == col[i + 1].first) continue;
        const double nl = static_cast<double>(i + 1), nr = static_cast<double>(col.size() - i - 1);
        const double sse = (lq - ls * ls / nl) + ((tq - lq) - (ts - ls) * (ts - ls) / nr);
        if (sse < best_sse - 1e-12) {
          best_sse = sse;
          best_f = static_cast<int>(f);
          best_thr = 0.5 * (col[i].first + col[i + 1].first);
        }
      }
    }
    if (best_f < 0 || !(best_sse < parent_sse)) return id;

    std::vector<std::size_t> l, r;
    for (auto row : rows) (x_[row][static_cast<std::size_t>(best_f)] <= best_thr ? l : r).push_back(row);
    t[id].feature = best_f;
    t[id].threshold = best_thr;
    const auto li = build(t, l, depth + 1, rng);
    const auto ri = build(t, r, depth + 1, rng);
    t[id].left = li;
    t[id].right = ri;
    return id;
  }

  Options opt_;
  std::vector<std::vector<double>> x_;
  std::vector<double> y_;
  std::size_t dims_ = 0;
  std::vector<Tree> trees_;
};

/// Expected improvement of a maximised objective over `best + xi`.
/// With zero spread it reduces to max(0, mean - best - xi).
inline double expected_improvement(double mean, double variance, double best, double xi) {
  const double gain = mean - best - xi;
  const double sd = std::sqrt(std::max(0.0, variance));
  if (sd <= 0) return std::max(0.0, gain);
  const double z = gain / sd;
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2 * M_PI);
  const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
  return gain * cdf + sd * pdf;
}

}  // namespace automlc
