#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "automlc/core/budget.hpp"
#include "automlc/core/matrix.hpp"
#include "automlc/core/random.hpp"
#include "automlc/expression.hpp"
#include "automlc/roster.hpp"

namespace automlc {

/// A single-label learner and its explicitly set hyperparameters.
/// `inner` is set only for bagging.
struct SLCSpec {
  std::string algorithm;
  std::map<std::string, std::string> params;
  std::shared_ptr<const SLCSpec> inner;

  const AlgorithmInfo& info() const {
    auto* a = find_algorithm(algorithm);
    if (!a || a->level != Level::slc) throw std::invalid_argument("unknown single-label algorithm '" + algorithm + "'");
    return *a;
  }
  ParamView view() const { return ParamView(info(), params); }

  /// Checks names, ranges, and the bagging/inner pairing.
  void validate() const {
    const auto& a = info();
    for (const auto& [k, v] : params) {
      auto* p = a.find(k);
      if (!p) throw std::invalid_argument(algorithm + ": unknown hyperparameter '" + k + "'");
      check_param(algorithm, *p, v);
    }
    if (a.takes_base != static_cast<bool>(inner))
      throw std::invalid_argument(algorithm + (a.takes_base ? " requires an inner learner" : " takes no inner learner"));
    if (inner) inner->validate();
  }

  ExprNode to_expr() const {
    ExprNode e{algorithm, params, {}};
    if (inner) e.inner.push_back(inner->to_expr());
    return e;
  }
  static SLCSpec from_expr(const ExprNode& e) {
    SLCSpec s{e.name, e.params, nullptr};
    if (e.has_base()) s.inner = std::make_shared<const SLCSpec>(from_expr(e.base()));
    return s;
  }

  friend bool operator==(const SLCSpec& a, const SLCSpec& b) {
    if (a.algorithm != b.algorithm || a.params != b.params) return false;
    if (!a.inner || !b.inner) return !a.inner && !b.inner;
    return *a.inner == *b.inner;
  }
};

namespace detail {

/// Scores over class indices 0..c-1 of the owning model.
class SlcImpl {
 public:
  virtual ~SlcImpl() = default;
  virtual RealMatrix predict(const RealMatrix& x) const = 0;
};

}  // namespace detail

/// Fitted single-label classifier. Immutable and cheap to copy.
class SLCModel {
 public:
  SLCModel() = default;
  SLCModel(std::vector<int> classes, std::size_t width, std::shared_ptr<const detail::SlcImpl> impl)
      : classes_(std::move(classes)), width_(width), impl_(std::move(impl)) {}

  const std::vector<int>& classes() const noexcept { return classes_; }
  std::size_t width() const noexcept { return width_; }

  /// t×c class probabilities, columns ordered as classes().
  RealMatrix predict_scores(const RealMatrix& x) const {
    if (x.cols() != width_)
      throw std::invalid_argument("feature width " + std::to_string(x.cols()) + " does not match fit width " +
                                  std::to_string(width_));
    return impl_->predict(x);
  }

  /// Probability of class `cls` per row; zero when the class was never seen.
  std::vector<double> probability_of(int cls, const RealMatrix& x) const {
    auto scores = predict_scores(x);
    std::vector<double> out(x.rows(), 0.0);
    auto it = std::find(classes_.begin(), classes_.end(), cls);
    if (it == classes_.end()) return out;
    const auto c = static_cast<std::size_t>(it - classes_.begin());
    for (std::size_t i = 0; i < x.rows(); ++i) out[i] = scores(i, c);
    return out;
  }

 private:
  std::vector<int> classes_;
  std::size_t width_ = 0;
  std::shared_ptr<const detail::SlcImpl> impl_;
};

namespace detail {

struct Standardizer {
  std::vector<double> mean, scale;

  static Standardizer fit(const RealMatrix& x) {
    Standardizer s;
    const auto n = static_cast<double>(x.rows());
    s.mean.assign(x.cols(), 0.0);
    s.scale.assign(x.cols(), 1.0);
    for (std::size_t j = 0; j < x.cols(); ++j) {
      double sum = 0;
      for (std::size_t i = 0; i < x.rows(); ++i) sum += x(i, j);
      s.mean[j] = sum / n;
      double ss = 0;
      for (std::size_t i = 0; i < x.rows(); ++i) ss += (x(i, j) - s.mean[j]) * (x(i, j) - s.mean[j]);
      const double sd = std::sqrt(ss / n);
      s.scale[j] = sd > 1e-12 ? sd : 1.0;
    }
    return s;
  }
  RealMatrix apply(const RealMatrix& x) const {
    RealMatrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = (x(i, j) - mean[j]) / scale[j];
    return out;
  }
};

inline void softmax_inplace(std::span<double> v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double sum = 0;
  for (auto& e : v) sum += (e = std::exp(e - mx));
  for (auto& e : v) e /= sum;
}

class ConstantImpl final : public SlcImpl {
 public:
  explicit ConstantImpl(std::vector<double> probs) : probs_(std::move(probs)) {}
  RealMatrix predict(const RealMatrix& x) const override {
    RealMatrix out(x.rows(), probs_.size());
    for (std::size_t i = 0; i < x.rows(); ++i) std::copy(probs_.begin(), probs_.end(), out.row(i).begin());
    return out;
  }

 private:
  std::vector<double> probs_;
};

// --- naive Bayes -----------------------------------------------------------

class GaussianNBImpl final : public SlcImpl {
 public:
  GaussianNBImpl(const RealMatrix& x, std::span<const std::size_t> y, std::size_t c) : c_(c), m_(x.cols()) {
    const auto n = x.rows();
    log_prior_.assign(c, 0.0);
    mean_.assign(c * m_, 0.0);
    var_.assign(c * m_, 0.0);
    std::vector<double> count(c, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      count[y[i]] += 1;
      for (std::size_t j = 0; j < m_; ++j) mean_[y[i] * m_ + j] += x(i, j);
    }
    for (std::size_t k = 0; k < c; ++k)
      for (std::size_t j = 0; j < m_; ++j) mean_[k * m_ + j] /= count[k];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m_; ++j) {
        const double d = x(i, j) - mean_[y[i] * m_ + j];
        var_[y[i] * m_ + j] += d * d;
      }
    // Variance floor relative to the widest feature, as in common implementations.
    double max_var = 0;
    for (std::size_t j = 0; j < m_; ++j) {
      double mu = 0, ss = 0;
      for (std::size_t i = 0; i < n; ++i) mu += x(i, j);
      mu /= static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) ss += (x(i, j) - mu) * (x(i, j) - mu);
      max_var = std::max(max_var, ss / static_cast<double>(n));
    }
    const double eps = 1e-9 * (max_var > 0 ? max_var : 1.0);
    for (std::size_t k = 0; k < c; ++k) {
      log_prior_[k] = std::log(count[k] / static_cast<double>(n));
      for (std::size_t j = 0; j < m_; ++j) var_[k * m_ + j] = var_[k * m_ + j] / count[k] + eps;
    }
  }

  RealMatrix predict(const RealMatrix& x) const override {
    RealMatrix out(x.rows(), c_);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      auto row = out.row(i);
      for (std::size_t k = 0; k < c_; ++k) {
        double lp = log_prior_[k];
        for (std::size_t j = 0; j < m_; ++j) {
          const double v = var_[k * m_ + j];
          const double d = x(i, j) - mean_[k * m_ + j];
          lp += -0.5 * std::log(2 * M_PI * v) - d * d / (2 * v);
        }
        row[k] = lp;
      }
      softmax_inplace(row);
    }
    return out;
  }

 private:
  std::size_t c_, m_;
  std::vector<double> log_prior_, mean_, var_;
};

/// Features are binarised as x > 0. Laplace/Lidstone smoothing with `alpha`.
class BernoulliNBImpl final : public SlcImpl {
 public:
  BernoulliNBImpl(const RealMatrix& x, std::span<const std::size_t> y, std::size_t c, double alpha)
      : c_(c), m_(x.cols()) {
    std::vector<double> count(c, 0.0), ones(c * m_, 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      count[y[i]] += 1;
      for (std::size_t j = 0; j < m_; ++j)
        if (x(i, j) > 0) ones[y[i] * m_ + j] += 1;
    }
    log_prior_.resize(c);
    log_p_.resize(c * m_);
    log_not_p_.resize(c * m_);
    for (std::size_t k = 0; k < c; ++k) {
      log_prior_[k] = std::log(count[k] / static_cast<double>(x.rows()));
      for (std::size_t j = 0; j < m_; ++j) {
        const double p = (ones[k * m_ + j] + alpha) / (count[k] + 2 * alpha);
        log_p_[k * m_ + j] = std::log(p);
        log_not_p_[k * m_ + j] = std::log1p(-p);
      }
    }
  }

  RealMatrix predict(const RealMatrix& x) const override {
    RealMatrix out(x.rows(), c_);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      auto row = out.row(i);
      for (std::size_t k = 0; k < c_; ++k) {
        double lp = log_prior_[k];
        for (std::size_t j = 0; j < m_; ++j) lp += x(i, j) > 0 ? log_p_[k * m_ + j] : log_not_p_[k * m_ + j];
        row[k] = lp;
      }
      softmax_inplace(row);
    }
    return out;
  }

 private:
  std::size_t c_, m_;
  std::vector<double> log_prior_, log_p_, log_not_p_;
};

// --- logistic regression ---------------------------------------------------

/// Multinomial logistic regression on standardised features with an appended
/// bias column. Weights are c × (m+1), row-major; the bias is not penalised.
/// Objective: sum of negative log-likelihoods + ridge/2 · ||W without bias||².
struct LogisticProblem {
  RealMatrix x;  // n × (m+1), last column = 1
  std::vector<std::size_t> y;
  std::size_t classes = 2;
  double ridge = 1e-8;

  std::size_t dims() const { return classes * x.cols(); }

  double objective(std::span<const double> w) const {
    const auto d = x.cols();
    std::vector<double> z(classes);
    double total = 0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      for (std::size_t k = 0; k < classes; ++k) {
        double s = 0;
        for (std::size_t j = 0; j < d; ++j) s += w[k * d + j] * x(i, j);
        z[k] = s;
      }
      const double mx = *std::max_element(z.begin(), z.end());
      double lse = 0;
      for (auto v : z) lse += std::exp(v - mx);
      total += mx + std::log(lse) - z[y[i]];
    }
    double pen = 0;
    for (std::size_t k = 0; k < classes; ++k)
      for (std::size_t j = 0; j + 1 < d; ++j) pen += w[k * d + j] * w[k * d + j];
    return total + 0.5 * ridge * pen;
  }

  std::vector<double> gradient(std::span<const double> w) const {
    const auto d = x.cols();
    std::vector<double> g(dims(), 0.0), p(classes);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      for (std::size_t k = 0; k < classes; ++k) {
        double s = 0;
        for (std::size_t j = 0; j < d; ++j) s += w[k * d + j] * x(i, j);
        p[k] = s;
      }
      softmax_inplace(p);
      for (std::size_t k = 0; k < classes; ++k) {
        const double r = p[k] - (y[i] == k ? 1.0 : 0.0);
        for (std::size_t j = 0; j < d; ++j) g[k * d + j] += r * x(i, j);
      }
    }
    for (std::size_t k = 0; k < classes; ++k)
      for (std::size_t j = 0; j + 1 < d; ++j) g[k * d + j] += ridge * w[k * d + j];
    return g;
  }

  /// Step on the summed objective: min(0.1, 1/L)/n, where L bounds the
  /// curvature of the mean objective, so every step is a descent step.
  double step() const {
    double mean_sq = 0;
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t j = 0; j < x.cols(); ++j) mean_sq += x(i, j) * x(i, j);
    const double n = static_cast<double>(x.rows());
    mean_sq /= n;
    const double lipschitz = 0.5 * mean_sq + ridge / n;
    return std::min(0.1, 1.0 / lipschitz) / n;
  }
};

inline RealMatrix with_bias(const RealMatrix& x) {
  RealMatrix out(x.rows(), x.cols() + 1, 1.0);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = x(i, j);
  return out;
}

class LogisticImpl final : public SlcImpl {
 public:
  LogisticImpl(Standardizer s, std::vector<double> w, std::size_t c) : std_(std::move(s)), w_(std::move(w)), c_(c) {}

  RealMatrix predict(const RealMatrix& x) const override {
    auto xb = with_bias(std_.apply(x));
    const auto d = xb.cols();
    RealMatrix out(x.rows(), c_);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      auto row = out.row(i);
      for (std::size_t k = 0; k < c_; ++k) {
        double s = 0;
        for (std::size_t j = 0; j < d; ++j) s += w_[k * d + j] * xb(i, j);
        row[k] = s;
      }
      softmax_inplace(row);
    }
    return out;
  }

  const std::vector<double>& weights() const { return w_; }

 private:
  Standardizer std_;
  std::vector<double> w_;
  std::size_t c_;
};

/// Batch gradient descent from zero weights. `history`, when given, receives
/// the objective before the first step and after every step.
inline std::vector<double> train_logistic(const LogisticProblem& prob, long long max_iter, const FitBudget* budget,
                                          std::vector<double>* history = nullptr) {
  std::vector<double> w(prob.dims(), 0.0);
  const double eta = prob.step();
  if (history) history->push_back(prob.objective(w));
  for (long long it = 0; it < max_iter; ++it) {
    if (budget) budget->check_time();
    auto g = prob.gradient(w);
    double gn = 0;
    for (auto v : g) gn += v * v;
    if (gn < 1e-20) break;
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= eta * g[i];
    if (history) history->push_back(prob.objective(w));
  }
  return w;
}

// --- decision tree -----------------------------------------------------------

class TreeImpl final : public SlcImpl {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0;
    std::size_t left = 0, right = 0;
    std::vector<double> probs;
  };

  TreeImpl(std::vector<Node> nodes, std::size_t c) : nodes_(std::move(nodes)), c_(c) {}

  RealMatrix predict(const RealMatrix& x) const override {
    RealMatrix out(x.rows(), c_);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      std::size_t at = 0;
      while (nodes_[at].feature >= 0)
        at = x(i, static_cast<std::size_t>(nodes_[at].feature)) <= nodes_[at].threshold ? nodes_[at].left : nodes_[at].right;
      std::copy(nodes_[at].probs.begin(), nodes_[at].probs.end(), out.row(i).begin());
    }
    return out;
  }

  std::size_t node_count() const { return nodes_.size(); }

 private:
  std::vector<Node> nodes_;
  std::size_t c_;
};

struct TreeParams {
  long long max_depth = 6;
  long long min_leaf = 2;
  bool entropy = false;
};

inline double impurity(std::span<const double> counts, double total, bool entropy) {
  if (total <= 0) return 0;
  double v = entropy ? 0.0 : 1.0;
  for (auto c : counts) {
    if (c <= 0) continue;
    const double p = c / total;
    v += entropy ? -p * std::log2(p) : -p * p;
  }
  return v;
}

/// CART with exhaustive midpoint thresholds. Candidate order is (feature,
/// threshold ascending) and only strict improvements replace the incumbent,
/// so the fitted tree does not depend on row order.
inline std::shared_ptr<TreeImpl> fit_tree(const RealMatrix& x, std::span<const std::size_t> y, std::size_t c,
                                          const TreeParams& params, const FitBudget* budget) {
  std::vector<TreeImpl::Node> nodes;
  struct Frame {
    std::vector<std::size_t> rows;
    long long depth;
    std::size_t node;
  };
  std::vector<Frame> stack;
  std::vector<std::size_t> all(x.rows());
  std::iota(all.begin(), all.end(), 0);
  nodes.emplace_back();
  stack.push_back({std::move(all), 0, 0});
  const auto min_leaf = static_cast<std::size_t>(std::max<long long>(1, params.min_leaf));

  while (!stack.empty()) {
    if (budget) budget->check_time();
    Frame f = std::move(stack.back());
    stack.pop_back();
    std::vector<double> counts(c, 0.0);
    for (auto r : f.rows) counts[y[r]] += 1;
    const double total = static_cast<double>(f.rows.size());
    {
      auto& node = nodes[f.node];
      node.probs.resize(c);
      for (std::size_t k = 0; k < c; ++k) node.probs[k] = counts[k] / total;
    }
    const double parent = impurity(counts, total, params.entropy) * total;
    if (f.depth >= params.max_depth || f.rows.size() < 2 * min_leaf || parent <= 1e-12) continue;

    double best_score = parent - 1e-12;
    int best_feature = -1;
    double best_threshold = 0;
    std::vector<std::size_t> order = f.rows;
    std::vector<double> left(c), right(c);
    for (std::size_t j = 0; j < x.cols(); ++j) {
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x(a, j) < x(b, j); });
      std::fill(left.begin(), left.end(), 0.0);
      right = counts;
      for (std::size_t p = 0; p + 1 < order.size(); ++p) {
        left[y[order[p]]] += 1;
        right[y[order[p]]] -= 1;
        const double lo = x(order[p], j), hi = x(order[p + 1], j);
        if (!(lo < hi)) continue;
        const std::size_t nl = p + 1, nr = order.size() - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const double score = impurity(left, static_cast<double>(nl), params.entropy) * static_cast<double>(nl) +
                             impurity(right, static_cast<double>(nr), params.entropy) * static_cast<double>(nr);
        if (score < best_score) {
          best_score = score;
          best_feature = static_cast<int>(j);
          best_threshold = lo + (hi - lo) / 2;
        }
      }
    }
    if (best_feature < 0) continue;
    std::vector<std::size_t> lrows, rrows;
    for (auto r : f.rows) (x(r, static_cast<std::size_t>(best_feature)) <= best_threshold ? lrows : rrows).push_back(r);
    const auto li = nodes.size();
    nodes.emplace_back();
    nodes.emplace_back();
    nodes[f.node].feature = best_feature;
    nodes[f.node].threshold = best_threshold;
    nodes[f.node].left = li;
    nodes[f.node].right = li + 1;
    stack.push_back({std::move(rrows), f.depth + 1, li + 1});
    stack.push_back({std::move(lrows), f.depth + 1, li});
  }
  return std::make_shared<TreeImpl>(std::move(nodes), c);
}

// --- k nearest neighbours ----------------------------------------------------

class KnnImpl final : public SlcImpl {
 public:
  KnnImpl(Standardizer s, RealMatrix train, std::vector<std::size_t> y, std::size_t c, std::size_t k, bool inverse)
      : std_(std::move(s)), train_(std::move(train)), y_(std::move(y)), c_(c), k_(k), inverse_(inverse) {}

  RealMatrix predict(const RealMatrix& x) const override {
    auto xs = std_.apply(x);
    const auto n = train_.rows();
    const auto k = std::min(k_, n);
    RealMatrix out(x.rows(), c_);
    std::vector<std::pair<double, std::size_t>> dist(n);  // (distance, class)
    for (std::size_t i = 0; i < x.rows(); ++i) {
      for (std::size_t r = 0; r < n; ++r) {
        double d = 0;
        for (std::size_t j = 0; j < xs.cols(); ++j) {
          const double t = xs(i, j) - train_(r, j);
          d += t * t;
        }
        dist[r] = {std::sqrt(d), y_[r]};
      }
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
      auto row = out.row(i);
      double total = 0;
      for (std::size_t t = 0; t < k; ++t) {
        const double w = inverse_ ? 1.0 / (dist[t].first + 1e-9) : 1.0;
        row[dist[t].second] += w;
        total += w;
      }
      for (auto& v : row) v /= total;
    }
    return out;
  }

 private:
  Standardizer std_;
  RealMatrix train_;
  std::vector<std::size_t> y_;
  std::size_t c_, k_;
  bool inverse_;
};

// --- bagging -----------------------------------------------------------------

class BaggingImpl final : public SlcImpl {
 public:
  struct Member {
    SLCModel model;
    std::vector<std::size_t> class_slot;  // member class index -> outer class index
  };
  BaggingImpl(std::vector<Member> members, std::size_t c) : members_(std::move(members)), c_(c) {}

  RealMatrix predict(const RealMatrix& x) const override {
    RealMatrix out(x.rows(), c_, 0.0);
    for (const auto& mem : members_) {
      auto s = mem.model.predict_scores(x);
      for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t k = 0; k < s.cols(); ++k) out(i, mem.class_slot[k]) += s(i, k);
    }
    for (auto& v : out.data()) v /= static_cast<double>(members_.size());
    return out;
  }

  std::size_t size() const { return members_.size(); }

 private:
  std::vector<Member> members_;
  std::size_t c_;
};

}  // namespace detail

inline SLCModel fit_slc(const SLCSpec& spec, const RealMatrix& features, std::span<const int> targets,
                        FitBudget* budget = nullptr);

namespace detail {

/// Bags drawn without replacement, each of round(fraction·n) rows (at least
/// one) kept in original row order. No roster range check on the bag count.
inline SLCModel fit_bagging(const SLCSpec& inner, std::size_t bags, double fraction, std::uint64_t seed,
                            const RealMatrix& x, std::span<const int> targets, const std::vector<int>& classes,
                            FitBudget* budget) {
  const auto n = x.rows();
  const auto take = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))));
  std::vector<BaggingImpl::Member> members;
  for (std::size_t b = 0; b < bags; ++b) {
    Rng rng(derive_seed(seed, b));
    auto perm = random_permutation(n, rng);
    std::vector<std::size_t> rows(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(std::min(take, n)));
    std::sort(rows.begin(), rows.end());
    std::vector<int> sub_y(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) sub_y[i] = targets[rows[i]];
    BaggingImpl::Member mem{fit_slc(inner, x.select_rows(rows), sub_y, budget), {}};
    for (int cls : mem.model.classes())
      mem.class_slot.push_back(static_cast<std::size_t>(std::lower_bound(classes.begin(), classes.end(), cls) - classes.begin()));
    members.push_back(std::move(mem));
  }
  return SLCModel(classes, x.cols(), std::make_shared<BaggingImpl>(std::move(members), classes.size()));
}

}  // namespace detail

/// Fits a single-label learner. Deterministic in (spec, data); single-class
/// targets give a constant predictor.
inline SLCModel fit_slc(const SLCSpec& spec, const RealMatrix& features, std::span<const int> targets, FitBudget* budget) {
  spec.validate();
  if (features.rows() == 0) throw std::invalid_argument("fit_slc needs at least one example");
  if (targets.size() != features.rows()) throw std::invalid_argument("target length does not match feature rows");
  if (budget) {
    budget->check_time();
    if (spec.algorithm != "bagging") budget->charge_models(1);
  }

  std::vector<int> classes(targets.begin(), targets.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  const auto c = classes.size();
  std::vector<std::size_t> y(targets.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = static_cast<std::size_t>(std::lower_bound(classes.begin(), classes.end(), targets[i]) - classes.begin());
  const auto m = features.cols();

  if (c == 1) return SLCModel(classes, m, std::make_shared<detail::ConstantImpl>(std::vector<double>{1.0}));

  const auto p = spec.view();
  const auto& a = spec.algorithm;
  if (a == "gaussian-nb") return SLCModel(classes, m, std::make_shared<detail::GaussianNBImpl>(features, y, c));
  if (a == "bernoulli-nb")
    return SLCModel(classes, m, std::make_shared<detail::BernoulliNBImpl>(features, y, c, p.real("alpha")));
  if (a == "logistic-regression") {
    auto st = detail::Standardizer::fit(features);
    detail::LogisticProblem prob{detail::with_bias(st.apply(features)), y, c, p.real("ridge")};
    auto w = detail::train_logistic(prob, p.integer("max_iter"), budget);
    return SLCModel(classes, m, std::make_shared<detail::LogisticImpl>(std::move(st), std::move(w), c));
  }
  if (a == "decision-tree") {
    detail::TreeParams tp{p.integer("max_depth"), p.integer("min_leaf"), p.raw("criterion") == "entropy"};
    return SLCModel(classes, m, detail::fit_tree(features, y, c, tp, budget));
  }
  if (a == "knn") {
    auto st = detail::Standardizer::fit(features);
    auto train = st.apply(features);
    return SLCModel(classes, m,
                    std::make_shared<detail::KnnImpl>(std::move(st), std::move(train), std::move(y), c,
                                                      static_cast<std::size_t>(p.integer("k")),
                                                      p.raw("weighting") == "inverse-distance"));
  }
  if (a == "bagging")
    return detail::fit_bagging(*spec.inner, static_cast<std::size_t>(p.integer("n_estimators")), p.real("bag_fraction"),
                               static_cast<std::uint64_t>(p.integer("seed")), features, targets, classes, budget);
  throw std::invalid_argument("unknown single-label algorithm '" + a + "'");
}

inline RealMatrix predict_scores(const SLCModel& model, const RealMatrix& features) { return model.predict_scores(features); }

}  // namespace automlc
