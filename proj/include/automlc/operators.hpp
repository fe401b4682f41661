#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "automlc/core/random.hpp"
#include "automlc/grammar.hpp"

namespace automlc {

struct Individual {
  DerivationTree tree;
  std::optional<int> species;
  std::optional<double> fitness;
  std::optional<std::size_t> record;  // index of the evaluation in the search trace

  friend bool operator==(const Individual&, const Individual&) = default;
};

namespace detail {

inline void replace_subtree(TreeNode& root, const NodePath& path, TreeNode sub) { node_at(root, path) = std::move(sub); }

inline Individual offspring(const Individual& parent, DerivationTree tree) {
  if (tree == parent.tree) return parent;
  return Individual{std::move(tree), parent.species, std::nullopt, std::nullopt};
}

}  // namespace detail

/// Swaps two subtrees rooted at the same nonterminal. The crossover point is
/// uniform over a's nonterminal nodes, the mate uniform over b's matches.
/// A child deeper than max_depth is replaced by its parent. When the grammars
/// differ (two species of one base grammar) each child is re-read against its
/// own parent's grammar, resetting frozen slots to their defaults.
inline std::pair<Individual, Individual> whigham_crossover(const Individual& a, const Individual& b, const Grammar& ga,
                                                           const Grammar& gb, int max_depth, Rng& rng) {
  auto points = nonterminal_paths(a.tree);
  const auto& pa = points[uniform_index(rng, points.size())];
  const int label = node_at(a.tree, pa).symbol;
  std::vector<NodePath> mates;
  for (auto& p : nonterminal_paths(b.tree))
    if (node_at(b.tree, p).symbol == label) mates.push_back(std::move(p));
  if (mates.empty()) return {a, b};
  const auto& pb = mates[uniform_index(rng, mates.size())];

  DerivationTree t1 = a.tree, t2 = b.tree;
  detail::replace_subtree(t1, pa, node_at(b.tree, pb));
  detail::replace_subtree(t2, pb, node_at(a.tree, pa));
  const bool same = &ga == &gb || ga == gb;
  if (!same) {
    t1 = conform(std::move(t1), ga);
    t2 = conform(std::move(t2), gb);
  }
  if (tree_height(t1) > max_depth || !validate(t1, ga)) t1 = a.tree;
  if (tree_height(t2) > max_depth || !validate(t2, gb)) t2 = b.tree;
  return {detail::offspring(a, std::move(t1)), detail::offspring(b, std::move(t2))};
}

/// Regrows a uniformly chosen nonterminal node within the remaining depth.
inline Individual whigham_mutation(const Individual& ind, const Grammar& g, int max_depth, Rng& rng) {
  auto points = nonterminal_paths(ind.tree);
  const auto& p = points[uniform_index(rng, points.size())];
  const int budget = max_depth - static_cast<int>(p.size());
  DerivationTree t = ind.tree;
  detail::replace_subtree(t, p, grow_from(g, node_at(t, p).symbol, budget, rng));
  return detail::offspring(ind, std::move(t));
}

/// `size` draws with replacement; the fittest wins, ties go to the earliest draw.
inline const Individual& tournament_select(const std::vector<Individual>& population, std::size_t size, Rng& rng) {
  if (population.empty()) throw std::invalid_argument("tournament over an empty population");
  if (size == 0) throw std::invalid_argument("tournament size must be positive");
  const Individual* best = nullptr;
  for (std::size_t i = 0; i < size; ++i) {
    const auto& cand = population[uniform_index(rng, population.size())];
    if (!cand.fitness) throw std::logic_error("tournament over an unevaluated individual");
    if (!best || *cand.fitness > *best->fitness) best = &cand;
  }
  return *best;
}

}  // namespace automlc
