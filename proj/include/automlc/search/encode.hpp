#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "automlc/grammar.hpp"

namespace automlc {

/// Fixed-length numeric layout of a grammar's derivations: a choice and an
/// activity dimension per nonterminal with several alternatives, a value and
/// an activity dimension per hyperparameter occurrence. Inactive slots keep
/// their default encoding.
class ConfigEncoder {
 public:
  explicit ConfigEncoder(const Grammar& g) : g_(g) {
    for (std::size_t nt = 0; nt < g.size(); ++nt) {
      const auto& alts = g.productions[nt].alternatives;
      if (alts.size() > 1) {
        choice_dim_[static_cast<int>(nt)] = defaults_.size();
        defaults_.push_back(0);
        defaults_.push_back(0);
      }
      for (std::size_t a = 0; a < alts.size(); ++a)
        for (std::size_t k = 0; k < alts[a].size(); ++k)
          if (alts[a][k].type == Symbol::Type::hyperparameter) {
            value_dim_[{static_cast<int>(nt), a, k}] = defaults_.size();
            defaults_.push_back(encode_value(alts[a][k].hp, alts[a][k].hp.default_value));
            defaults_.push_back(0);
          }
    }
  }

  std::size_t dimensions() const { return defaults_.size(); }

  std::vector<double> encode(const DerivationTree& tree) const {
    auto v = defaults_;
    walk(tree, v);
    return v;
  }

  std::vector<double> encode(const PipelineConfig& cfg) const {
    auto t = derive(g_, cfg);
    if (!t) throw std::invalid_argument("configuration not derivable from the grammar: " + cfg.to_string());
    return encode(*t);
  }

  /// Categorical: choice index. Numeric: position in [0,1], log-scaled when flagged.
  static double encode_value(const Hyperparameter& hp, const std::string& value) {
    if (hp.kind == TerminalKind::categorical) {
      for (std::size_t i = 0; i < hp.choices.size(); ++i)
        if (hp.choices[i] == value) return static_cast<double>(i);
      return 0;
    }
    const double x = *text::parse_real(value);
    if (hp.hi == hp.lo) return 0;
    if (hp.log) return (std::log(x) - std::log(hp.lo)) / (std::log(hp.hi) - std::log(hp.lo));
    return (x - hp.lo) / (hp.hi - hp.lo);
  }

 private:
  void walk(const TreeNode& n, std::vector<double>& v) const {
    if (auto it = choice_dim_.find(n.symbol); it != choice_dim_.end()) {
      v[it->second] = n.alt;
      v[it->second + 1] = 1;
    }
    const auto& alt = g_.at(n.symbol).alternatives[static_cast<std::size_t>(n.alt)];
    for (std::size_t k = 0; k < alt.size(); ++k) {
      if (alt[k].type == Symbol::Type::nonterminal) {
        walk(n.children[k], v);
      } else if (alt[k].type == Symbol::Type::hyperparameter) {
        auto d = value_dim_.at({n.symbol, static_cast<std::size_t>(n.alt), k});
        v[d] = encode_value(alt[k].hp, n.children[k].value);
        v[d + 1] = 1;
      }
    }
  }

  const Grammar& g_;
  std::vector<double> defaults_;
  std::map<int, std::size_t> choice_dim_;
  std::map<std::tuple<int, std::size_t, std::size_t>, std::size_t> value_dim_;
};

inline std::vector<double> encode_config(const Grammar& g, const PipelineConfig& cfg) { return ConfigEncoder(g).encode(cfg); }

}  // namespace automlc
