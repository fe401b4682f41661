#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "automlc/core/text.hpp"

namespace automlc {

enum class ParamType { categorical, integer, real };

struct ParamInfo {
  std::string name;
  ParamType type;
  double lo = 0;
  double hi = 0;
  std::vector<std::string> choices;
  std::string default_value;
};

enum class Level { slc, mlc, meta };

struct AlgorithmInfo {
  std::string name;
  Level level;
  bool takes_base;  // wraps an inner learner via `base=`
  std::vector<ParamInfo> params;

  const ParamInfo* find(std::string_view p) const {
    for (auto& info : params)
      if (info.name == p) return &info;
    return nullptr;
  }
};

inline const std::vector<AlgorithmInfo>& algorithm_roster() {
  using P = ParamType;
  static const std::vector<AlgorithmInfo> roster = {
      {"gaussian-nb", Level::slc, false, {}},
      {"bernoulli-nb", Level::slc, false, {{"alpha", P::real, 0.01, 10, {}, "1"}}},
      {"logistic-regression",
       Level::slc,
       false,
       {{"ridge", P::real, 1e-8, 10, {}, "1e-08"}, {"max_iter", P::integer, 10, 500, {}, "100"}}},
      {"decision-tree",
       Level::slc,
       false,
       {{"max_depth", P::integer, 1, 20, {}, "6"},
        {"min_leaf", P::integer, 1, 20, {}, "2"},
        {"criterion", P::categorical, 0, 0, {"gini", "entropy"}, "gini"}}},
      {"knn",
       Level::slc,
       false,
       {{"k", P::integer, 1, 30, {}, "5"}, {"weighting", P::categorical, 0, 0, {"uniform", "inverse-distance"}, "uniform"}}},
      {"bagging",
       Level::slc,
       true,
       {{"n_estimators", P::integer, 5, 50, {}, "10"},
        {"bag_fraction", P::real, 0.3, 1.0, {}, "1"},
        {"seed", P::integer, 0, 2147483647, {}, "0"}}},
      {"BR", Level::mlc, true, {}},
      {"CC", Level::mlc, true, {}},
      {"LP", Level::mlc, true, {}},
      {"PS", Level::mlc, true, {{"prune_threshold", P::integer, 1, 10, {}, "2"}}},
      {"ML-KNN", Level::mlc, false, {{"k", P::integer, 1, 30, {}, "10"}, {"smoothing", P::real, 0.1, 2, {}, "1"}}},
      {"ensemble-mlc", Level::meta, true, {{"n", P::integer, 3, 10, {}, "5"}}},
      {"subspace-mlc", Level::meta, true, {{"fraction", P::real, 0.3, 0.9, {}, "0.5"}, {"n", P::integer, 3, 10, {}, "5"}}},
  };
  return roster;
}

inline const AlgorithmInfo* find_algorithm(std::string_view name) {
  for (auto& a : algorithm_roster())
    if (a.name == name) return &a;
  return nullptr;
}

inline const ParamInfo& threshold_param() {
  static const ParamInfo info{"threshold", ParamType::real, 0.05, 0.95, {}, "0.5"};
  return info;
}

/// Checks `value` against a parameter domain; throws std::invalid_argument.
inline void check_param(const std::string& owner, const ParamInfo& info, std::string_view value) {
  auto fail = [&](const std::string& why) {
    throw std::invalid_argument(owner + ": hyperparameter '" + info.name + "'=" + std::string(value) + " " + why);
  };
  switch (info.type) {
    case ParamType::categorical:
      if (std::find(info.choices.begin(), info.choices.end(), value) == info.choices.end()) fail("is not an allowed choice");
      break;
    case ParamType::integer: {
      auto v = text::parse_int(value);
      if (!v) fail("is not an integer");
      if (static_cast<double>(*v) < info.lo || static_cast<double>(*v) > info.hi) fail("is out of range");
      break;
    }
    case ParamType::real: {
      auto v = text::parse_real(value);
      if (!v || !std::isfinite(*v)) fail("is not a real number");
      if (*v < info.lo || *v > info.hi) fail("is out of range");
      break;
    }
  }
}

/// Typed view over an explicit parameter map with roster defaults filled in.
/// No range checks here; callers validate first when that matters.
class ParamView {
 public:
  ParamView(const AlgorithmInfo& info, const std::map<std::string, std::string>& explicit_params)
      : info_(&info), params_(&explicit_params) {}

  std::string raw(std::string_view name) const {
    if (auto it = params_->find(std::string(name)); it != params_->end()) return it->second;
    if (auto* p = info_->find(name)) return p->default_value;
    throw std::logic_error("unknown hyperparameter " + std::string(name));
  }
  long long integer(std::string_view name) const {
    auto v = text::parse_int(raw(name));
    if (!v) throw std::invalid_argument("hyperparameter " + std::string(name) + " is not an integer");
    return *v;
  }
  double real(std::string_view name) const {
    auto v = text::parse_real(raw(name));
    if (!v) throw std::invalid_argument("hyperparameter " + std::string(name) + " is not a real number");
    return *v;
  }

 private:
  const AlgorithmInfo* info_;
  const std::map<std::string, std::string>* params_;
};

}  // namespace automlc
