#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "automlc/core/random.hpp"
#include "automlc/grammar.hpp"
#include "automlc/operators.hpp"
#include "automlc/search/encode.hpp"
#include "automlc/search/forest.hpp"
#include "automlc/search/trace.hpp"

namespace automlc {

namespace detail {

/// A grown tree whose configuration has not been evaluated yet, if one turns
/// up within a bounded number of draws.
inline DerivationTree fresh_tree(const Grammar& g, const SearchContext& ctx, Rng& rng, std::size_t tries = 200) {
  DerivationTree t = grow(g, rng);
  for (std::size_t i = 1; i < tries && ctx.seen(map_to_config(t, g).to_string()); ++i) t = grow(g, rng);
  return t;
}

inline DerivationTree initial_tree(const Grammar& g, Rng& rng) {
  if (g.init)
    if (auto t = derive(g, parse_expression(*g.init))) return *t;
  return grow(g, rng);
}

}  // namespace detail

/// Sequential model-based optimisation: the grammar's @init configuration
/// first, then configurations maximising expected improvement under a
/// random-forest surrogate, with a purely random pick every
/// interleave_random_every-th iteration.
inline SearchResult run_bo(const Grammar& g, Objective& objective, const SearchConfig& cfg, const Budget& budget) {
  SearchContext ctx(g, objective, cfg, budget);
  Rng rng(derive_seed(cfg.seed, 0xB0));
  ConfigEncoder enc(g);
  std::vector<std::vector<double>> xs;
  std::vector<double> ys;
  std::vector<Individual> evaluated;

  auto run_one = [&](DerivationTree t, std::size_t iteration) {
    Individual ind;
    ind.tree = std::move(t);
    ctx.evaluate(ind, g, iteration, 0);
    if (ctx.last_was_cached()) return;
    xs.push_back(enc.encode(ind.tree));
    ys.push_back(*ind.fitness);
    evaluated.push_back(std::move(ind));
  };

  run_one(detail::initial_tree(g, rng), 0);
  RandomForestRegressor::Options opt;
  opt.trees = cfg.trees;
  for (std::size_t it = 1; !ctx.exhausted(); ++it) {
    if (it % cfg.interleave_random_every == 0) {
      run_one(detail::fresh_tree(g, ctx, rng), it);
      continue;
    }
    RandomForestRegressor forest(opt);
    forest.fit(xs, ys, rng);
    const double best = ctx.incumbent_fitness();

    std::vector<DerivationTree> pool;
    for (std::size_t i = 0; i < cfg.candidates_per_round; ++i) pool.push_back(grow(g, rng));
    std::vector<std::size_t> order(evaluated.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return ys[a] > ys[b]; });
    for (std::size_t k = 0; k < std::min(cfg.top_incumbents, order.size()); ++k)
      for (std::size_t m = 0; m < cfg.mutations_per_incumbent; ++m)
        pool.push_back(whigham_mutation(evaluated[order[k]], g, g.max_depth, rng).tree);

    std::set<std::string> scored;
    std::optional<DerivationTree> pick;
    double pick_ei = -1;
    for (auto& t : pool) {
      auto expr = map_to_config(t, g).to_string();
      if (ctx.seen(expr) || !scored.insert(expr).second) continue;
      auto p = forest.predict(enc.encode(t));
      double ei = expected_improvement(p.mean, p.variance, best, cfg.xi);
      if (ei > pick_ei) {
        pick_ei = ei;
        pick = t;
      }
    }
    run_one(pick ? std::move(*pick) : detail::fresh_tree(g, ctx, rng), it);
  }
  return ctx.finish();
}

}  // namespace automlc
