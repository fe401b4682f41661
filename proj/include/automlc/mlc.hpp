#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "automlc/core/budget.hpp"
#include "automlc/core/matrix.hpp"
#include "automlc/core/random.hpp"
#include "automlc/dataset.hpp"
#include "automlc/pipeline.hpp"
#include "automlc/slc.hpp"

namespace automlc {

using Labelset = std::vector<std::uint8_t>;

/// Introspection of a fitted multi-label model.
struct MLCModelInfo {
  std::string algorithm;
  std::size_t binary_models = 0;         // BR/CC links
  std::vector<std::size_t> chain_order;  // CC only
  std::vector<Labelset> labelsets;       // LP/PS classes, in class order
  std::vector<std::size_t> labelset_counts;
  std::vector<std::size_t> attributes;  // subspace members: selected columns
  std::vector<MLCModelInfo> members;    // meta methods
};

namespace detail {

class MlcImpl {
 public:
  virtual ~MlcImpl() = default;
  virtual RealMatrix scores(const RealMatrix& x) const = 0;
  virtual MLCModelInfo info() const = 0;
};

}  // namespace detail

/// Fitted multi-label classifier; immutable.
class MLCModel {
 public:
  MLCModel() = default;
  MLCModel(std::size_t width, std::size_t labels, std::shared_ptr<const detail::MlcImpl> impl)
      : width_(width), q_(labels), impl_(std::move(impl)) {}

  std::size_t width() const noexcept { return width_; }
  std::size_t labels() const noexcept { return q_; }
  MLCModelInfo info() const { return impl_->info(); }

  RealMatrix scores(const RealMatrix& x) const {
    if (x.cols() != width_)
      throw std::invalid_argument("feature width " + std::to_string(x.cols()) + " does not match fit width " +
                                  std::to_string(width_));
    return impl_->scores(x);
  }

 private:
  std::size_t width_ = 0, q_ = 0;
  std::shared_ptr<const detail::MlcImpl> impl_;
};

/// Binary decisions (score >= threshold) and the underlying t×q scores.
struct Prediction {
  BinaryMatrix binary;
  RealMatrix scores;
};

inline BinaryMatrix apply_threshold(const RealMatrix& scores, double threshold) {
  BinaryMatrix out(scores.rows(), scores.cols());
  for (std::size_t i = 0; i < scores.data().size(); ++i) out.data()[i] = scores.data()[i] >= threshold ? 1 : 0;
  return out;
}

inline Prediction predict(const MLCModel& model, const RealMatrix& features, double threshold) {
  auto s = model.scores(features);
  for (auto& v : s.data()) v = std::clamp(v, 0.0, 1.0);
  return {apply_threshold(s, threshold), std::move(s)};
}

namespace detail {

/// Produces a fitted single-label model for one sub-problem.
using SlcFitter = std::function<SLCModel(const RealMatrix&, std::span<const int>)>;

inline std::vector<int> label_column(const BinaryMatrix& y, std::size_t j) {
  std::vector<int> t(y.rows());
  for (std::size_t i = 0; i < y.rows(); ++i) t[i] = y(i, j);
  return t;
}

class BinaryRelevanceImpl final : public MlcImpl {
 public:
  explicit BinaryRelevanceImpl(std::vector<SLCModel> models) : models_(std::move(models)) {}

  RealMatrix scores(const RealMatrix& x) const override {
    RealMatrix out(x.rows(), models_.size());
    for (std::size_t j = 0; j < models_.size(); ++j) {
      auto p = models_[j].probability_of(1, x);
      for (std::size_t i = 0; i < x.rows(); ++i) out(i, j) = p[i];
    }
    return out;
  }
  MLCModelInfo info() const override { return {"BR", models_.size(), {}, {}, {}, {}, {}}; }

 private:
  std::vector<SLCModel> models_;
};

inline std::shared_ptr<MlcImpl> fit_binary_relevance(const RealMatrix& x, const BinaryMatrix& y, const SlcFitter& fit) {
  std::vector<SLCModel> models;
  for (std::size_t j = 0; j < y.cols(); ++j) models.push_back(fit(x, label_column(y, j)));
  return std::make_shared<BinaryRelevanceImpl>(std::move(models));
}

/// Link t sees the original features followed by the outputs of links
/// 0..t-1 in chain order: true labels at fit time, predicted decisions
/// (probability >= 0.5) at prediction time.
class ChainImpl final : public MlcImpl {
 public:
  ChainImpl(std::vector<std::size_t> order, std::vector<SLCModel> links)
      : order_(std::move(order)), links_(std::move(links)) {}

  RealMatrix scores(const RealMatrix& x) const override {
    const auto n = x.rows(), m = x.cols();
    RealMatrix out(n, order_.size());
    RealMatrix aug(n, m + order_.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) aug(i, j) = x(i, j);
    for (std::size_t t = 0; t < order_.size(); ++t) {
      std::vector<std::size_t> cols(m + t);
      std::iota(cols.begin(), cols.end(), 0);
      auto p = links_[t].probability_of(1, aug.select_cols(cols));
      for (std::size_t i = 0; i < n; ++i) {
        out(i, order_[t]) = p[i];
        aug(i, m + t) = p[i] >= 0.5 ? 1.0 : 0.0;
      }
    }
    return out;
  }
  MLCModelInfo info() const override { return {"CC", links_.size(), order_, {}, {}, {}, {}}; }

 private:
  std::vector<std::size_t> order_;
  std::vector<SLCModel> links_;
};

inline std::shared_ptr<MlcImpl> fit_chain(const RealMatrix& x, const BinaryMatrix& y, std::vector<std::size_t> order,
                                          const SlcFitter& fit) {
  const auto n = x.rows(), m = x.cols();
  std::vector<SLCModel> links;
  RealMatrix aug(n, m);
  for (std::size_t t = 0; t < order.size(); ++t) {
    if (t > 0) {
      RealMatrix next(n, m + t);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m + t - 1; ++j) next(i, j) = aug(i, j);
        next(i, m + t - 1) = y(i, order[t - 1]);
      }
      aug = std::move(next);
    } else {
      aug = x;
    }
    links.push_back(fit(aug, label_column(y, order[t])));
  }
  return std::make_shared<ChainImpl>(std::move(order), std::move(links));
}

class PowersetImpl final : public MlcImpl {
 public:
  PowersetImpl(std::string name, std::vector<Labelset> sets, std::vector<std::size_t> counts, SLCModel model, std::size_t q)
      : name_(std::move(name)), sets_(std::move(sets)), counts_(std::move(counts)), model_(std::move(model)), q_(q) {}

  RealMatrix scores(const RealMatrix& x) const override {
    auto probs = model_.predict_scores(x);
    RealMatrix out(x.rows(), q_, 0.0);
    const auto& cls = model_.classes();
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t c = 0; c < cls.size(); ++c) {
        const auto& set = sets_[static_cast<std::size_t>(cls[c])];
        for (std::size_t j = 0; j < q_; ++j)
          if (set[j]) out(i, j) += probs(i, c);
      }
    return out;
  }
  MLCModelInfo info() const override { return {name_, 0, {}, sets_, counts_, {}, {}}; }

 private:
  std::string name_;
  std::vector<Labelset> sets_;
  std::vector<std::size_t> counts_;
  SLCModel model_;
  std::size_t q_;
};

/// Label powerset over the given per-example labelsets. Classes are the
/// distinct labelsets in lexicographic order.
inline std::shared_ptr<MlcImpl> fit_powerset(std::string name, const RealMatrix& x, const std::vector<Labelset>& rows,
                                             std::size_t q, const SlcFitter& fit, FitBudget* budget) {
  std::map<Labelset, std::size_t> counts;
  for (const auto& r : rows) ++counts[r];
  if (budget) budget->check_labelsets(counts.size());
  std::vector<Labelset> sets;
  std::vector<std::size_t> freq;
  std::map<Labelset, int> id;
  for (const auto& [set, c] : counts) {
    id[set] = static_cast<int>(sets.size());
    sets.push_back(set);
    freq.push_back(c);
  }
  std::vector<int> targets(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) targets[i] = id[rows[i]];
  return std::make_shared<PowersetImpl>(std::move(name), std::move(sets), std::move(freq), fit(x, targets), q);
}

inline std::vector<Labelset> labelset_rows(const BinaryMatrix& y) {
  std::vector<Labelset> rows;
  for (std::size_t i = 0; i < y.rows(); ++i) rows.emplace_back(y.row(i).begin(), y.row(i).end());
  return rows;
}

inline bool is_subset(const Labelset& a, const Labelset& b) {
  for (std::size_t j = 0; j < a.size(); ++j)
    if (a[j] && !b[j]) return false;
  return true;
}

/// Pruned sets: labelsets seen fewer than `prune` times are replaced by the
/// largest surviving subset (ties: more frequent, then lexicographically
/// smaller). The empty labelset always survives.
inline std::vector<Labelset> prune_labelsets(const std::vector<Labelset>& rows, std::size_t q, long long prune) {
  std::map<Labelset, std::size_t> counts;
  for (const auto& r : rows) ++counts[r];
  std::vector<std::pair<Labelset, std::size_t>> survivors;
  const Labelset empty(q, 0);
  for (const auto& [set, c] : counts)
    if (static_cast<long long>(c) >= prune || set == empty) survivors.emplace_back(set, c);
  if (std::none_of(survivors.begin(), survivors.end(), [&](auto& s) { return s.first == empty; }))
    survivors.emplace_back(empty, 0);

  std::vector<Labelset> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    if (static_cast<long long>(counts[r]) >= prune) {
      out.push_back(r);
      continue;
    }
    const std::pair<Labelset, std::size_t>* best = nullptr;
    std::size_t best_size = 0;
    for (const auto& s : survivors) {
      if (!is_subset(s.first, r)) continue;
      const auto size = static_cast<std::size_t>(std::count(s.first.begin(), s.first.end(), 1));
      if (!best || size > best_size || (size == best_size && s.second > best->second)) {
        best = &s;
        best_size = size;
      }
    }
    out.push_back(best->first);
  }
  return out;
}

/// ML-KNN: per-label prior and neighbour-count likelihoods with smoothing s.
class MlKnnImpl final : public MlcImpl {
 public:
  MlKnnImpl(Standardizer st, RealMatrix train, BinaryMatrix y, std::size_t k, std::vector<double> prior,
            std::vector<double> like1, std::vector<double> like0)
      : st_(std::move(st)),
        train_(std::move(train)),
        y_(std::move(y)),
        k_(k),
        prior_(std::move(prior)),
        like1_(std::move(like1)),
        like0_(std::move(like0)) {}

  RealMatrix scores(const RealMatrix& x) const override {
    auto xs = st_.apply(x);
    const auto q = y_.cols();
    RealMatrix out(x.rows(), q);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      auto nb = neighbours(xs.row(i), static_cast<std::size_t>(-1));
      for (std::size_t j = 0; j < q; ++j) {
        std::size_t c = 0;
        for (auto r : nb) c += y_(r, j);
        const double a = prior_[j] * like1_[j * (k_ + 1) + c];
        const double b = (1 - prior_[j]) * like0_[j * (k_ + 1) + c];
        out(i, j) = a + b > 0 ? a / (a + b) : prior_[j];
      }
    }
    return out;
  }
  MLCModelInfo info() const override { return {"ML-KNN", 0, {}, {}, {}, {}, {}}; }

  /// Nearest training rows to `point`, skipping `skip`; ties by row index.
  std::vector<std::size_t> neighbours(std::span<const double> point, std::size_t skip) const {
    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t r = 0; r < train_.rows(); ++r) {
      if (r == skip) continue;
      double s = 0;
      for (std::size_t j = 0; j < point.size(); ++j) s += (point[j] - train_(r, j)) * (point[j] - train_(r, j));
      d.emplace_back(s, r);
    }
    const auto k = std::min(k_, d.size());
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
    std::vector<std::size_t> out;
    for (std::size_t t = 0; t < k; ++t) out.push_back(d[t].second);
    return out;
  }

 private:
  Standardizer st_;
  RealMatrix train_;
  BinaryMatrix y_;
  std::size_t k_;
  std::vector<double> prior_, like1_, like0_;
};

inline std::shared_ptr<MlcImpl> fit_mlknn(const RealMatrix& x, const BinaryMatrix& y, std::size_t k, double s,
                                          FitBudget* budget) {
  auto st = Standardizer::fit(x);
  auto xs = st.apply(x);
  const auto n = x.rows(), q = y.cols();
  std::vector<double> prior(q);
  for (std::size_t j = 0; j < q; ++j) {
    double pos = 0;
    for (std::size_t i = 0; i < n; ++i) pos += y(i, j);
    prior[j] = (s + pos) / (2 * s + static_cast<double>(n));
  }
  // Neighbour search uses a provisional model holding only the training data.
  MlKnnImpl probe(st, xs, y, k, prior, {}, {});
  std::vector<double> c1(q * (k + 1), 0.0), c0(q * (k + 1), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (budget) budget->check_time();
    auto nb = probe.neighbours(xs.row(i), i);
    for (std::size_t j = 0; j < q; ++j) {
      std::size_t c = 0;
      for (auto r : nb) c += y(r, j);
      (y(i, j) ? c1 : c0)[j * (k + 1) + c] += 1;
    }
  }
  std::vector<double> like1(q * (k + 1)), like0(q * (k + 1));
  for (std::size_t j = 0; j < q; ++j) {
    double t1 = 0, t0 = 0;
    for (std::size_t c = 0; c <= k; ++c) t1 += c1[j * (k + 1) + c], t0 += c0[j * (k + 1) + c];
    for (std::size_t c = 0; c <= k; ++c) {
      like1[j * (k + 1) + c] = (s + c1[j * (k + 1) + c]) / (s * static_cast<double>(k + 1) + t1);
      like0[j * (k + 1) + c] = (s + c0[j * (k + 1) + c]) / (s * static_cast<double>(k + 1) + t0);
    }
  }
  return std::make_shared<MlKnnImpl>(std::move(st), std::move(xs), y, k, std::move(prior), std::move(like1),
                                     std::move(like0));
}

class MetaImpl final : public MlcImpl {
 public:
  struct Member {
    MLCModel model;
    std::vector<std::size_t> columns;  // empty = all columns
  };
  MetaImpl(std::string name, std::vector<Member> members) : name_(std::move(name)), members_(std::move(members)) {}

  RealMatrix scores(const RealMatrix& x) const override {
    RealMatrix out;
    for (const auto& mem : members_) {
      auto s = mem.columns.empty() ? mem.model.scores(x) : mem.model.scores(x.select_cols(mem.columns));
      if (out.empty())
        out = std::move(s);
      else
        for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] += s.data()[i];
    }
    for (auto& v : out.data()) v /= static_cast<double>(members_.size());
    return out;
  }
  MLCModelInfo info() const override {
    MLCModelInfo mi{name_, 0, {}, {}, {}, {}, {}};
    for (const auto& mem : members_) {
      auto sub = mem.model.info();
      sub.attributes = mem.columns;
      mi.members.push_back(std::move(sub));
    }
    return mi;
  }

 private:
  std::string name_;
  std::vector<Member> members_;
};

/// Seed of meta member i; member 0 reuses the pipeline seed.
inline std::uint64_t member_seed(std::uint64_t seed, std::size_t i) { return seed ^ (i * 0x9E3779B97F4A7C15ULL); }

inline MLCModel fit_mlc_level(const PipelineConfig& cfg, const RealMatrix& x, const BinaryMatrix& y, std::uint64_t seed,
                              FitBudget* budget) {
  const auto& mlc = cfg.mlc;
  const auto* info = find_algorithm(mlc.algorithm);
  if (!info || info->level != Level::mlc) throw std::invalid_argument("unknown multi-label algorithm '" + mlc.algorithm + "'");
  const ParamView p(*info, mlc.params);
  SlcFitter fit;
  if (mlc.base) {
    const SLCSpec base = *mlc.base;
    fit = [base, budget](const RealMatrix& f, std::span<const int> t) { return fit_slc(base, f, t, budget); };
  }
  const auto q = y.cols();
  std::shared_ptr<MlcImpl> impl;
  if (mlc.algorithm == "BR") {
    impl = fit_binary_relevance(x, y, fit);
  } else if (mlc.algorithm == "CC") {
    Rng rng(derive_seed(seed, 0xCC));
    impl = fit_chain(x, y, random_permutation(q, rng), fit);
  } else if (mlc.algorithm == "LP" || mlc.algorithm == "PS") {
    if (q < 2) throw std::invalid_argument(mlc.algorithm + " needs at least two labels");
    auto rows = labelset_rows(y);
    if (mlc.algorithm == "PS") rows = prune_labelsets(rows, q, p.integer("prune_threshold"));
    impl = fit_powerset(mlc.algorithm, x, rows, q, fit, budget);
  } else if (mlc.algorithm == "ML-KNN") {
    if (budget) budget->charge_models(1);
    impl = fit_mlknn(x, y, static_cast<std::size_t>(p.integer("k")), p.real("smoothing"), budget);
  } else {
    throw std::invalid_argument("unknown multi-label algorithm '" + mlc.algorithm + "'");
  }
  return MLCModel(x.cols(), q, std::move(impl));
}

}  // namespace detail

/// Fits the pipeline on a dataset. Meta members see bootstrap samples
/// (ensemble-mlc) or sorted random attribute subsets (subspace-mlc).
inline MLCModel fit_mlc(const MLCPipeline& pipeline, const MLDataset& ds, std::uint64_t seed, FitBudget* budget = nullptr) {
  const auto& cfg = pipeline.config();
  if (!cfg.meta) return detail::fit_mlc_level(cfg, ds.features, ds.labels, seed, budget);

  const auto* info = find_algorithm(cfg.meta->algorithm);
  if (!info || info->level != Level::meta) throw std::invalid_argument("unknown meta algorithm '" + cfg.meta->algorithm + "'");
  const ParamView p(*info, cfg.meta->params);
  const auto members = static_cast<std::size_t>(p.integer("n"));
  const auto n = ds.n(), m = ds.m();
  std::vector<detail::MetaImpl::Member> fitted;
  for (std::size_t i = 0; i < members; ++i) {
    const auto s = detail::member_seed(seed, i);
    Rng rng(derive_seed(s, 0x5EED));
    if (cfg.meta->algorithm == "ensemble-mlc") {
      std::vector<std::size_t> rows(n);
      for (auto& r : rows) r = uniform_index(rng, n);
      std::sort(rows.begin(), rows.end());
      fitted.push_back({detail::fit_mlc_level(cfg, ds.features.select_rows(rows), ds.labels.select_rows(rows), s, budget), {}});
    } else {
      const auto count = std::clamp<std::size_t>(
          static_cast<std::size_t>(std::llround(p.real("fraction") * static_cast<double>(m))), 1, m);
      auto perm = random_permutation(m, rng);
      std::vector<std::size_t> cols(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(count));
      std::sort(cols.begin(), cols.end());
      fitted.push_back({detail::fit_mlc_level(cfg, ds.features.select_cols(cols), ds.labels, s, budget), cols});
    }
  }
  return MLCModel(m, ds.q(), std::make_shared<detail::MetaImpl>(cfg.meta->algorithm, std::move(fitted)));
}

}  // namespace automlc
