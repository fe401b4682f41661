#pragma once

#include <chrono>
#include <cstddef>
#include <limits>
#include <string>

#include "automlc/core/errors.hpp"

namespace automlc {

using Clock = std::chrono::steady_clock;

/// Cooperative wall-clock deadline. Long-running loops call check() once per
/// pass over the training data; a default-constructed deadline never fires.
class Deadline {
 public:
  Deadline() = default;

  static Deadline after(double seconds) {
    Deadline d;
    if (seconds < std::numeric_limits<double>::infinity()) {
      d.armed_ = true;
      d.at_ = Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(seconds));
    }
    return d;
  }

  bool armed() const noexcept { return armed_; }
  bool expired() const { return armed_ && Clock::now() >= at_; }

  void check() const {
    if (expired()) throw BudgetExceeded(BudgetExceeded::Reason::time, "per-candidate time budget exceeded");
  }

 private:
  bool armed_ = false;
  Clock::time_point at_{};
};

/// Per-fit resource accounting: deadline plus a cap on the number of fitted
/// single-label models (the memory proxy) and on label-powerset classes.
class FitBudget {
 public:
  static constexpr std::size_t kUnlimited = std::numeric_limits<std::size_t>::max();
  static constexpr std::size_t kDefaultModelCap = 500;
  static constexpr std::size_t kDefaultLabelsetCap = 2000;

  FitBudget() = default;
  FitBudget(Deadline deadline, std::size_t model_cap, std::size_t labelset_cap = kDefaultLabelsetCap)
      : deadline_(deadline), model_cap_(model_cap), labelset_cap_(labelset_cap) {}

  void check_time() const { deadline_.check(); }

  void charge_models(std::size_t n) {
    models_ += n;
    if (models_ > model_cap_)
      throw BudgetExceeded(BudgetExceeded::Reason::model_size,
                           "model-size cap exceeded (" + std::to_string(models_) + " > " + std::to_string(model_cap_) + ")");
  }

  void check_labelsets(std::size_t classes) const {
    if (classes > labelset_cap_)
      throw BudgetExceeded(BudgetExceeded::Reason::model_size,
                           "labelset class cap exceeded (" + std::to_string(classes) + " > " +
                               std::to_string(labelset_cap_) + ")");
  }

  std::size_t models_charged() const noexcept { return models_; }
  const Deadline& deadline() const noexcept { return deadline_; }

 private:
  Deadline deadline_{};
  std::size_t model_cap_ = kUnlimited;
  std::size_t labelset_cap_ = kUnlimited;
  std::size_t models_ = 0;
};

}  // namespace automlc
