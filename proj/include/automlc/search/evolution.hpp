#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "automlc/core/random.hpp"
#include "automlc/grammar.hpp"
#include "automlc/operators.hpp"
#include "automlc/search/trace.hpp"

namespace automlc {

namespace detail {

struct Population {
  int species = 8;
  Grammar grammar;
  std::size_t size = 0;
  std::uint64_t seed = 0;
  Rng rng;
  std::vector<Individual> members;
  std::size_t restarts = 0;
  std::size_t start = 0;  // generation the current run of this population began
  std::size_t stall = 0;
  std::string best_expression;
  std::optional<std::size_t> best_record;
};

inline std::size_t best_index(const std::vector<Individual>& members) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < members.size(); ++i)
    if (members[i].fitness.value_or(-1) > members[best].fitness.value_or(-1)) best = i;
  return best;
}

/// Evolution engine behind GGP (one population of species 8) and spGGP
/// (one population per species).
class Evolution {
 public:
  Evolution(const Grammar& base, Objective& objective, const SearchConfig& cfg, const Budget& budget,
            std::vector<int> species, std::size_t size, bool speciated)
      : ctx_(base, objective, cfg, budget), cfg_(cfg), speciated_(speciated) {
    if (cfg.elitism >= size) throw std::invalid_argument("elitism must be smaller than each population");
    for (std::size_t p = 0; p < species.size(); ++p) {
      Population pop;
      pop.species = species[p];
      pop.grammar = species_grammar(base, species[p]);
      pop.size = size;
      pop.seed = derive_seed(cfg.seed, 0xE0 + p);
      pop.rng = Rng(derive_seed(pop.seed, 0));
      pops_.push_back(std::move(pop));
    }
  }

  SearchResult run() {
    std::size_t gen = 0;
    for (auto& pop : pops_) pop.members = populate(pop);
    if (!evaluate_all(gen, false)) return ctx_.finish();
    for (auto& pop : pops_) track(pop);

    while (!ctx_.exhausted()) {
      ++gen;
      const bool resample = gen % cfg_.resample_every == 0;
      std::vector<std::vector<Individual>> next(pops_.size());
      for (std::size_t p = 0; p < pops_.size(); ++p) {
        auto& pop = pops_[p];
        const std::size_t ran = gen - 1 - pop.start;
        if (ran >= cfg_.restart_min_gens && pop.stall >= cfg_.restart_stall) {
          ctx_.note_restart(gen - 1, p, tag(pop));
          ++pop.restarts;
          pop.rng = Rng(derive_seed(pop.seed, pop.restarts));
          pop.start = gen;
          pop.stall = 0;
          pop.best_expression.clear();
          next[p] = populate(pop);
        } else {
          next[p] = breed(p);
        }
      }
      for (std::size_t p = 0; p < pops_.size(); ++p) pops_[p].members = std::move(next[p]);
      if (!evaluate_all(gen, resample)) break;
      for (auto& pop : pops_) track(pop);
    }
    return ctx_.finish();
  }

 private:
  std::optional<int> tag(const Population& pop) const { return speciated_ ? std::optional<int>(pop.species) : std::nullopt; }

  std::vector<Individual> populate(Population& pop) {
    std::vector<Individual> out;
    while (out.size() < pop.size) {
      Individual ind;
      ind.tree = grow(pop.grammar, pop.rng);
      ind.species = tag(pop);
      out.push_back(std::move(ind));
    }
    return out;
  }

  /// Evaluates members without fitness (all members on a resample
  /// generation). Returns false when the budget ran out part-way.
  bool evaluate_all(std::size_t gen, bool resample) {
    const std::size_t epoch = gen / cfg_.resample_every;
    for (auto& pop : pops_)
      for (auto& ind : pop.members) {
        if (ind.fitness && !resample) continue;
        if (ctx_.exhausted()) return false;
        ctx_.evaluate(ind, pop.grammar, gen, epoch);
      }
    return true;
  }

  void track(Population& pop) {
    const auto& best = pop.members[best_index(pop.members)];
    auto expr = map_to_config(best.tree, pop.grammar).to_string();
    if (!pop.best_expression.empty() && expr == pop.best_expression) {
      ++pop.stall;
    } else {
      pop.stall = 0;
      pop.best_expression = std::move(expr);
    }
  }

  std::vector<Individual> breed(std::size_t p) {
    auto& pop = pops_[p];
    auto& rng = pop.rng;
    const auto& g = pop.grammar;
    const int depth = g.max_depth;
    std::vector<std::size_t> order(pop.members.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return *pop.members[a].fitness > *pop.members[b].fitness;
    });
    std::vector<Individual> next;
    for (std::size_t e = 0; e < cfg_.elitism && e < order.size(); ++e) next.push_back(pop.members[order[e]]);

    while (next.size() < pop.size) {
      const double r = uniform01(rng);
      if (r < cfg_.p_crossover) {
        const auto& a = tournament_select(pop.members, cfg_.tournament, rng);
        if (speciated_ && pops_.size() > 1 && !bernoulli(rng, cfg_.intra_crossover)) {
          auto q = uniform_index(rng, pops_.size() - 1);
          if (q >= p) ++q;
          const auto& b = tournament_select(pops_[q].members, cfg_.tournament, rng);
          auto children = whigham_crossover(a, b, g, pops_[q].grammar, depth, rng);
          next.push_back(std::move(children.first));
        } else {
          const auto& b = tournament_select(pop.members, cfg_.tournament, rng);
          auto children = whigham_crossover(a, b, g, g, depth, rng);
          next.push_back(std::move(children.first));
          if (next.size() < pop.size) next.push_back(std::move(children.second));
        }
      } else if (r < cfg_.p_crossover + cfg_.p_mutation) {
        next.push_back(whigham_mutation(tournament_select(pop.members, cfg_.tournament, rng), g, depth, rng));
      } else {
        next.push_back(tournament_select(pop.members, cfg_.tournament, rng));
      }
    }
    return next;
  }

  SearchContext ctx_;
  SearchConfig cfg_;
  bool speciated_;
  std::vector<Population> pops_;
};

}  // namespace detail

/// Grammar-based GP: one population, tournament selection, elitism,
/// Whigham crossover and mutation, periodic resampling of the validation
/// split and restarts on stagnation.
inline SearchResult run_ggp(const Grammar& g, Objective& objective, const SearchConfig& cfg, const Budget& budget) {
  return detail::Evolution(g, objective, cfg, budget, {8}, cfg.population, false).run();
}

/// Speciated GGP: species_count populations of per_species individuals,
/// species s evolving only the hyperparameter kinds its mask allows.
/// With species_count c the species are 9-c .. 8.
inline SearchResult run_spggp(const Grammar& g, Objective& objective, const SearchConfig& cfg, const Budget& budget) {
  std::vector<int> species;
  for (int s = 9 - static_cast<int>(cfg.species_count); s <= 8; ++s) species.push_back(s);
  return detail::Evolution(g, objective, cfg, budget, species, cfg.per_species, true).run();
}

}  // namespace automlc
