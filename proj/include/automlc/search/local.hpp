#pragma once

#include <cstddef>
#include <vector>

#include "automlc/core/random.hpp"
#include "automlc/grammar.hpp"
#include "automlc/operators.hpp"
#include "automlc/search/trace.hpp"

namespace automlc {

/// Batches of p grown configurations; the best of each batch joins a list
/// whose best is returned.
inline SearchResult run_rs(const Grammar& g, Objective& objective, const SearchConfig& cfg, const Budget& budget) {
  SearchContext ctx(g, objective, cfg, budget);
  Rng rng(derive_seed(cfg.seed, 0xA5));
  for (std::size_t batch = 0; !ctx.exhausted(); ++batch) {
    for (std::size_t i = 0; i < cfg.p && !ctx.exhausted(); ++i) {
      Individual ind;
      ind.tree = grow(g, rng);
      ctx.evaluate(ind, g, batch, 0);
    }
  }
  return ctx.finish();
}

/// Greedy local search: batches of p mutation neighbours of the current
/// best; the best neighbour replaces it when strictly fitter.
inline SearchResult run_gs(const Grammar& g, Objective& objective, const SearchConfig& cfg, const Budget& budget) {
  SearchContext ctx(g, objective, cfg, budget);
  Rng rng(derive_seed(cfg.seed, 0x65));
  Individual best;
  best.tree = grow(g, rng);
  ctx.evaluate(best, g, 0, 0);
  for (std::size_t batch = 1; !ctx.exhausted(); ++batch) {
    std::optional<Individual> top;
    for (std::size_t i = 0; i < cfg.p && !ctx.exhausted(); ++i) {
      auto n = whigham_mutation(best, g, g.max_depth, rng);
      n.fitness.reset();
      ctx.evaluate(n, g, batch, 0, best.record);
      if (!top || *n.fitness > *top->fitness) top = std::move(n);
    }
    if (top && *top->fitness > *best.fitness) best = std::move(*top);
  }
  return ctx.finish();
}

}  // namespace automlc
