#include <gtest/gtest.h>

#include "automlc/operators.hpp"
#include "automlc/pipeline.hpp"
#include "support.hpp"

using namespace automlc;
using testing_support::load_grammar;

namespace {

Individual make(DerivationTree t, std::optional<double> fitness = std::nullopt) {
  Individual ind;
  ind.tree = std::move(t);
  ind.fitness = fitness;
  return ind;
}

}  // namespace

TEST(Operators, IdenticalParentsGiveIdenticalChildren) {
  auto g = load_grammar("large_ref");
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    auto a = make(grow(g, rng), 0.5);
    auto [c1, c2] = whigham_crossover(a, a, g, g, g.max_depth, rng);
    EXPECT_EQ(c1.tree, a.tree);
    EXPECT_EQ(c2.tree, a.tree);
    EXPECT_EQ(c1.fitness, a.fitness);
  }
}

TEST(Operators, NoSharedNonterminalLeavesParents) {
  auto g = parse_grammar("<s> ::= <a> | <b>\n<a> ::= alg\"BR\" <x>\n<b> ::= alg\"CC\" <y>\n<x> ::= alg\"knn\"\n<y> ::= alg\"gaussian-nb\"\n");
  Rng rng(2);
  auto a = make(*derive(g, PipelineConfig::parse("BR(base=knn)")), 0.1);
  auto b = make(*derive(g, PipelineConfig::parse("CC(base=gaussian-nb)")), 0.2);
  for (int i = 0; i < 100; ++i) {
    auto [c1, c2] = whigham_crossover(a, b, g, g, g.max_depth, rng);
    // Only the root matches; swapping whole trees exchanges the parents.
    EXPECT_TRUE((c1.tree == a.tree && c2.tree == b.tree) || (c1.tree == b.tree && c2.tree == a.tree));
  }
}

TEST(Operators, CrossoverSwapsMatchingSubtrees) {
  auto g = load_grammar("small_ref");
  auto a = make(*derive(g, PipelineConfig::parse("BR(threshold=0.5, base=knn(k=3))")), 0.1);
  auto b = make(*derive(g, PipelineConfig::parse("CC(threshold=0.7, base=gaussian-nb)")), 0.2);
  Rng rng(3);
  std::set<std::string> seen;
  for (int i = 0; i < 300; ++i) {
    auto [c1, c2] = whigham_crossover(a, b, g, g, g.max_depth, rng);
    ASSERT_TRUE(validate(c1.tree, g));
    ASSERT_TRUE(validate(c2.tree, g));
    seen.insert(map_to_config(c1.tree, g).to_string());
  }
  EXPECT_TRUE(seen.count("BR(threshold=0.7, base=knn(k=3))"));
  EXPECT_TRUE(seen.count("BR(threshold=0.5, base=gaussian-nb)"));
  EXPECT_TRUE(seen.count("CC(threshold=0.5, base=gaussian-nb)"));
}

TEST(Operators, ClosureOnLargeGrammar) {
  auto g = load_grammar("large_ref");
  Rng rng(4);
  std::vector<Individual> pool;
  for (int i = 0; i < 50; ++i) pool.push_back(make(grow(g, rng), 0.0));
  for (int i = 0; i < 3000; ++i) {
    const auto& a = pool[uniform_index(rng, pool.size())];
    const auto& b = pool[uniform_index(rng, pool.size())];
    auto [c1, c2] = whigham_crossover(a, b, g, g, g.max_depth, rng);
    auto m = whigham_mutation(c1, g, g.max_depth, rng);
    for (auto* t : {&c1.tree, &c2.tree, &m.tree}) {
      ASSERT_TRUE(validate(*t, g));
      ASSERT_NO_THROW(build_pipeline(map_to_config(*t, g)));
    }
    pool[uniform_index(rng, pool.size())] = m;
  }
}

TEST(Operators, ChildrenRespectDepthCap) {
  auto g = load_grammar("large_ref");
  Rng rng(5);
  const int cap = g.min_depth[0] + 1;
  for (int i = 0; i < 500; ++i) {
    auto a = make(grow(g, rng, cap), 0.0), b = make(grow(g, rng, cap), 0.0);
    auto [c1, c2] = whigham_crossover(a, b, g, g, cap, rng);
    EXPECT_LE(tree_height(c1.tree), cap);
    EXPECT_LE(tree_height(c2.tree), cap);
    EXPECT_LE(tree_height(whigham_mutation(a, g, cap, rng).tree), cap);
  }
}

TEST(Operators, MutationOnSingleDerivationIsIdentity) {
  auto g = parse_grammar("<s> ::= alg\"BR\" <b>\n<b> ::= alg\"knn\" \"weighting=uniform\"\n");
  Rng rng(6);
  auto a = make(grow(g, rng), 0.4);
  for (int i = 0; i < 50; ++i) {
    auto m = whigham_mutation(a, g, g.max_depth, rng);
    EXPECT_EQ(m, a);
  }
}

TEST(Operators, MutatedChildLosesFitness) {
  auto g = load_grammar("large_ref");
  Rng rng(7);
  auto a = make(grow(g, rng), 0.4);
  for (int i = 0; i < 200; ++i) {
    auto m = whigham_mutation(a, g, g.max_depth, rng);
    if (m.tree != a.tree) EXPECT_FALSE(m.fitness);
    else EXPECT_EQ(m.fitness, a.fitness);
  }
}

TEST(Operators, SpeciesOneMutationKeepsHyperparametersFrozen) {
  auto base = load_grammar("large_ref");
  auto g = species_grammar(base, 1);
  Rng rng(8);
  auto ind = make(grow(g, rng));
  for (int i = 0; i < 1000; ++i) {
    ind = whigham_mutation(ind, g, g.max_depth, rng);
    ASSERT_TRUE(validate(ind.tree, g));
    auto cfg = map_to_config(ind.tree, g);
    auto t = derive(base, cfg);
    ASSERT_TRUE(t);
    // Conforming the base tree to species 1 resets every value to its default.
    auto defaults = map_to_config(conform(*t, g), g);
    EXPECT_EQ(defaults.to_string(), cfg.to_string());
  }
}

TEST(Operators, InterSpeciesCrossoverConformsToOwnGrammar) {
  auto base = load_grammar("large_ref");
  auto g1 = species_grammar(base, 1), g8 = species_grammar(base, 8);
  Rng rng(9);
  for (int i = 0; i < 500; ++i) {
    auto a = make(grow(g1, rng), 0.0), b = make(grow(g8, rng), 0.0);
    auto [c1, c2] = whigham_crossover(a, b, g1, g8, base.max_depth, rng);
    ASSERT_TRUE(validate(c1.tree, g1));
    ASSERT_TRUE(validate(c2.tree, g8));
  }
}

TEST(Operators, TournamentSelection) {
  Rng rng(10);
  std::vector<Individual> one{make(DerivationTree{}, 0.3)};
  for (int i = 0; i < 10; ++i) EXPECT_EQ(&tournament_select(one, 2, rng), &one[0]);

  std::vector<Individual> two{make(DerivationTree{}, 0.9), make(DerivationTree{}, 0.1)};
  int wins = 0;
  const int trials = 10000;
  for (int i = 0; i < trials; ++i) wins += &tournament_select(two, 2, rng) == &two[0];
  EXPECT_NEAR(static_cast<double>(wins) / trials, 0.75, 0.03);

  std::vector<Individual> bad{make(DerivationTree{}, 0.3), make(DerivationTree{})};
  EXPECT_THROW(
      {
        for (int i = 0; i < 100; ++i) tournament_select(bad, 2, rng);
      },
      std::logic_error);
  EXPECT_THROW(tournament_select({}, 2, rng), std::invalid_argument);
  EXPECT_THROW(tournament_select(one, 0, rng), std::invalid_argument);
}
