#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "automlc/core/budget.hpp"
#include "automlc/core/random.hpp"
#include "automlc/dataset.hpp"
#include "automlc/metrics.hpp"
#include "automlc/mlc.hpp"
#include "automlc/pipeline.hpp"

namespace automlc {

/// Search-level resource limits. Infinity disables a time limit; an unset
/// max_evaluations leaves the run bounded by wall clock only.
struct Budget {
  double total_seconds = std::numeric_limits<double>::infinity();
  double per_candidate_seconds = std::numeric_limits<double>::infinity();
  std::size_t model_size_cap = FitBudget::kDefaultModelCap;
  std::optional<std::size_t> max_evaluations;

  void validate() const {
    if (!(total_seconds > 0) || !(per_candidate_seconds > 0)) throw std::invalid_argument("budget times must be positive");
    if (model_size_cap == 0) throw std::invalid_argument("model_size_cap must be positive");
    if (max_evaluations && *max_evaluations == 0) throw std::invalid_argument("max_evaluations must be positive");
  }
};

/// Outcome of one candidate evaluation. Any failure yields fitness 0; budget
/// violations additionally set the flag.
struct Evaluation {
  MetricsReport report;
  bool violation = false;
  std::string reason;  // empty, "time", "model_size" or "error: <what>"
  double seconds = 0;

  double fitness() const { return report.fitness; }
};

inline MetricsReport zero_report() {
  MetricsReport r;
  r.em = 0;
  r.hl = 1;
  r.fm = 0;
  r.rl = 1;
  r.fitness = 0;
  return r;
}

/// Report whose four measures all correspond to fitness f.
inline MetricsReport surface_report(double f) {
  MetricsReport r;
  r.em = f;
  r.hl = 1 - f;
  r.fm = f;
  r.rl = 1 - f;
  r.fitness = f;
  return r;
}

/// What a search optimises. `epoch` selects the learn/validation split for
/// methods that resample it.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual Evaluation evaluate(const PipelineConfig& cfg, std::uint64_t seed, std::size_t epoch, const Deadline& deadline) = 0;
};

/// Fits on `learn`, scores on `valid`. Never throws: budget trips and fit
/// errors map to fitness 0 with a reason.
inline Evaluation evaluate_candidate(const PipelineConfig& cfg, const MLDataset& learn, const MLDataset& valid,
                                     const Deadline& deadline, std::size_t model_size_cap, std::uint64_t seed) {
  Evaluation ev;
  const auto t0 = Clock::now();
  try {
    if (learn.m() != valid.m() || learn.q() != valid.q()) throw std::invalid_argument("learn/validation shapes differ");
    auto pipeline = build_pipeline(cfg);
    FitBudget fb(deadline, model_size_cap);
    auto model = fit_mlc(pipeline, learn, seed, &fb);
    fb.check_time();
    auto pred = predict(model, valid.features, cfg.effective_threshold());
    fb.check_time();
    ev.report = evaluate_predictions(pred.binary, pred.scores, valid.labels);
  } catch (const BudgetExceeded& e) {
    ev.report = zero_report();
    ev.violation = true;
    ev.reason = e.reason() == BudgetExceeded::Reason::time ? "time" : "model_size";
  } catch (const std::exception& e) {
    ev.report = zero_report();
    ev.reason = std::string("error: ") + e.what();
  }
  ev.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return ev;
}

inline Evaluation evaluate_candidate(const PipelineConfig& cfg, const MLDataset& learn, const MLDataset& valid,
                                     const Budget& budget, std::uint64_t seed) {
  return evaluate_candidate(cfg, learn, valid, Deadline::after(budget.per_candidate_seconds), budget.model_size_cap, seed);
}

/// Learn/validation splits of a training set, one per epoch, drawn by
/// iterative stratification.
class DatasetObjective final : public Objective {
 public:
  DatasetObjective(MLDataset train, std::uint64_t split_seed, double validation_fraction = 0.3,
                   std::size_t model_size_cap = FitBudget::kDefaultModelCap)
      : train_(std::move(train)), seed_(split_seed), fraction_(validation_fraction), cap_(model_size_cap) {}

  Evaluation evaluate(const PipelineConfig& cfg, std::uint64_t seed, std::size_t epoch, const Deadline& deadline) override {
    const auto& [learn, valid] = split(epoch);
    return evaluate_candidate(cfg, learn, valid, deadline, cap_, seed);
  }

  const std::pair<MLDataset, MLDataset>& split(std::size_t epoch) {
    auto it = splits_.find(epoch);
    if (it == splits_.end()) {
      it = splits_.emplace(epoch, split_learn_validation(train_, fraction_, derive_seed(seed_, epoch))).first;
    }
    return it->second;
  }

 private:
  MLDataset train_;
  std::uint64_t seed_;
  double fraction_;
  std::size_t cap_;
  std::map<std::size_t, std::pair<MLDataset, MLDataset>> splits_;
};

/// Fitness given directly as a function of the configuration and its
/// canonical expression (synthetic surfaces, tests).
class FunctionObjective final : public Objective {
 public:
  using Fn = std::function<double(const PipelineConfig&, const std::string&)>;

  explicit FunctionObjective(Fn fn) : fn_(std::move(fn)) {}

  Evaluation evaluate(const PipelineConfig& cfg, std::uint64_t, std::size_t, const Deadline&) override {
    Evaluation ev;
    ev.report = surface_report(fn_(cfg, cfg.to_string()));
    return ev;
  }

 private:
  Fn fn_;
};

}  // namespace automlc
