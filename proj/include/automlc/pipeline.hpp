#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "automlc/expression.hpp"
#include "automlc/roster.hpp"
#include "automlc/slc.hpp"

namespace automlc {

struct MLCSpec {
  std::string algorithm;
  std::map<std::string, std::string> params;
  std::optional<SLCSpec> base;  // absent for ML-KNN

  friend bool operator==(const MLCSpec&, const MLCSpec&) = default;
};

struct MetaSpec {
  std::string algorithm;
  std::map<std::string, std::string> params;

  friend bool operator==(const MetaSpec&, const MetaSpec&) = default;
};

/// The executable description an individual maps to: optional meta layer,
/// one multi-label method, its base learner, and the decision threshold.
/// Hyperparameters not set explicitly take roster defaults.
struct PipelineConfig {
  std::optional<MetaSpec> meta;
  MLCSpec mlc;
  std::optional<double> threshold;

  double effective_threshold() const { return threshold.value_or(0.5); }

  ExprNode to_expr() const {
    ExprNode m{mlc.algorithm, mlc.params, {}};
    if (mlc.base) m.inner.push_back(mlc.base->to_expr());
    ExprNode root = m;
    if (meta) {
      root = ExprNode{meta->algorithm, meta->params, {std::move(m)}};
    }
    if (threshold) root.params["threshold"] = text::format_real(*threshold);
    return root;
  }

  std::string to_string() const { return format_expression(to_expr()); }

  /// Structural conversion only; build_pipeline performs the checks.
  static PipelineConfig from_expr(ExprNode root) {
    PipelineConfig cfg;
    if (auto it = root.params.find("threshold"); it != root.params.end()) {
      auto v = text::parse_real(it->second);
      if (!v) throw ParseError("threshold '" + it->second + "' is not a real number");
      cfg.threshold = *v;
      root.params.erase(it);
    }
    const ExprNode* mlc = &root;
    if (auto* a = find_algorithm(root.name); a && a->level == Level::meta) {
      cfg.meta = MetaSpec{root.name, root.params};
      if (!root.has_base()) throw ParseError(root.name + " needs a base multi-label method");
      mlc = &root.base();
    }
    cfg.mlc.algorithm = mlc->name;
    cfg.mlc.params = mlc->params;
    if (mlc->has_base()) cfg.mlc.base = SLCSpec::from_expr(mlc->base());
    return cfg;
  }

  static PipelineConfig parse(std::string_view expression) { return from_expr(parse_expression(expression)); }

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

/// A configuration that passed roster validation.
class MLCPipeline {
 public:
  const PipelineConfig& config() const noexcept { return config_; }

  /// Bypasses roster range checks. For tests of degenerate settings
  /// (one subspace member, full attribute fraction, ...).
  static MLCPipeline unchecked(PipelineConfig cfg) { return MLCPipeline(std::move(cfg)); }

 private:
  explicit MLCPipeline(PipelineConfig cfg) : config_(std::move(cfg)) {}
  friend MLCPipeline build_pipeline(const PipelineConfig&);

  PipelineConfig config_;
};

namespace detail {

inline void check_params(const AlgorithmInfo& info, const std::map<std::string, std::string>& params) {
  for (const auto& [k, v] : params) {
    auto* p = info.find(k);
    if (!p) throw std::invalid_argument(info.name + ": unknown hyperparameter '" + k + "'");
    check_param(info.name, *p, v);
  }
}

}  // namespace detail

/// Validates names, hyperparameter ranges and the base-learner invariant.
inline MLCPipeline build_pipeline(const PipelineConfig& cfg) {
  if (cfg.meta) {
    auto* a = find_algorithm(cfg.meta->algorithm);
    if (!a || a->level != Level::meta) throw std::invalid_argument("unknown meta algorithm '" + cfg.meta->algorithm + "'");
    detail::check_params(*a, cfg.meta->params);
  }
  auto* a = find_algorithm(cfg.mlc.algorithm);
  if (!a || a->level != Level::mlc) throw std::invalid_argument("unknown multi-label algorithm '" + cfg.mlc.algorithm + "'");
  detail::check_params(*a, cfg.mlc.params);
  if (a->takes_base && !cfg.mlc.base) throw std::invalid_argument(a->name + " requires a base learner");
  if (!a->takes_base && cfg.mlc.base) throw std::invalid_argument(a->name + " does not take a base learner");
  if (cfg.mlc.base) cfg.mlc.base->validate();
  if (cfg.threshold) check_param("pipeline", threshold_param(), text::format_real(*cfg.threshold));
  return MLCPipeline(cfg);
}

}  // namespace automlc
