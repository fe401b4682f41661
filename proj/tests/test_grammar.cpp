#include <gtest/gtest.h>

#include <set>

#include "automlc/grammar.hpp"
#include "automlc/pipeline.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace automlc;
using testing_support::load_grammar;

namespace {

bool has_hyperparameters(const Grammar& g, TerminalKind kind) {
  for (const auto& p : g.productions)
    for (const auto& alt : p.alternatives)
      for (const auto& s : alt)
        if (s.type == Symbol::Type::hyperparameter && s.hp.kind == kind) return true;
  return false;
}

}  // namespace

TEST(Grammar, ParsesSingleLiteral) {
  auto g = parse_grammar("<s> ::= \"BR\"\n");
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(g.productions[0].alternatives.size(), 1u);
  EXPECT_EQ(count_combinations(g), 1);
  Rng rng(1);
  auto t = grow(g, rng);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(grow(g, rng), t);
}

TEST(Grammar, RejectsMalformedGrammars) {
  auto expect_error = [](const std::string& text, const std::string& fragment) {
    try {
      parse_grammar(text);
      ADD_FAILURE() << "accepted: " << text;
    } catch (const ParseError& e) {
      EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
    }
  };
  expect_error("<a> ::= <a>\n", "<a>");
  expect_error("<a> ::= alg\"BR\" <b>\n", "<b>");
  expect_error("<a> ::= alg\"knn\" k:int[1,5]=9\n", "k");
  expect_error("<a> ::= alg\"BR\"\n<b> ::= alg\"CC\"\n", "<b>");
  expect_error("", "no productions");
}

TEST(Grammar, BundledGrammarShapes) {
  EXPECT_EQ(load_grammar("small_ref").size(), 6u);
  EXPECT_EQ(load_grammar("medium_ref").size(), 7u);
  for (auto name : {"tiny_ref", "small_ref", "medium_ref", "large_ref"}) {
    auto g = load_grammar(name);
    EXPECT_TRUE(g.init.has_value()) << name;
    EXPECT_EQ(parse_grammar(format_grammar(g)), g) << name;
  }
}

TEST(Grammar, GrownTreesValidateAndBuild) {
  for (auto name : {"tiny_ref", "small_ref", "medium_ref", "large_ref"}) {
    auto g = load_grammar(name);
    Rng rng(derive_seed(7, hash_string(name)));
    for (int i = 0; i < 2000; ++i) {
      auto t = grow(g, rng);
      ASSERT_TRUE(validate(t, g)) << name;
      auto cfg = map_to_config(t, g);
      ASSERT_NO_THROW(build_pipeline(cfg)) << cfg.to_string();
      auto back = derive(g, cfg);
      ASSERT_TRUE(back) << cfg.to_string();
      EXPECT_EQ(map_to_config(*back, g).to_string(), cfg.to_string());
    }
  }
}

TEST(Grammar, ValidateRejectsTamperedTrees) {
  auto g = load_grammar("small_ref");
  auto t = *derive(g, PipelineConfig::parse("BR(threshold=0.5, base=logistic-regression(ridge=0.019))"));
  ASSERT_TRUE(validate(t, g));

  // Threshold nudged outside its domain.
  auto nudged = t;
  auto& thr = node_at(nudged, {1, 0});
  ASSERT_TRUE(thr.is_terminal());
  thr.value = "0.96";
  EXPECT_FALSE(validate(nudged, g));

  // Children swapped.
  auto permuted = t;
  std::swap(permuted.children[0], permuted.children[1]);
  EXPECT_FALSE(validate(permuted, g));

  // Wrong alternative index.
  auto wrong = t;
  wrong.alt = 3;
  EXPECT_FALSE(validate(wrong, g));
}

TEST(Grammar, MapsWorkedExample) {
  auto g = load_grammar("small_ref");
  const std::string expr = "BR(threshold=0.3, base=logistic-regression(ridge=0.019))";
  auto t = derive(g, PipelineConfig::parse(expr));
  ASSERT_TRUE(t);
  auto cfg = map_to_config(*t, g);
  EXPECT_EQ(cfg.to_string(), expr);
  EXPECT_EQ(cfg.mlc.algorithm, "BR");
  EXPECT_DOUBLE_EQ(cfg.effective_threshold(), 0.3);
  ASSERT_TRUE(cfg.mlc.base);
  EXPECT_EQ(cfg.mlc.base->algorithm, "logistic-regression");
  EXPECT_EQ(cfg.mlc.base->params.at("ridge"), "0.019");

  EXPECT_FALSE(derive(g, PipelineConfig::parse("BR(base=svm)")));
  EXPECT_FALSE(derive(g, PipelineConfig::parse("BR(threshold=0.99, base=gaussian-nb)")));
}

TEST(Grammar, TinyEnumeration) {
  auto g = load_grammar("tiny_ref");
  auto trees = enumerate_trees(g);
  EXPECT_EQ(trees.size(), 45u);
  std::set<std::string> exprs;
  for (auto& t : trees) {
    EXPECT_TRUE(validate(t, g));
    exprs.insert(map_to_config(t, g).to_string());
  }
  EXPECT_EQ(exprs.size(), 45u);
  EXPECT_EQ(count_combinations(g), 7);
  EXPECT_EQ(list_skeletons(g).size(), 7u);
}

TEST(Grammar, ContinuousDomainsAreNotEnumerable) {
  EXPECT_THROW(enumerate_trees(load_grammar("small_ref")), UnsupportedError);
}

TEST(Grammar, CountsMatchIndependentEnumerator) {
  const std::map<std::string, int> expected{{"tiny_ref", 7}, {"small_ref", 21}, {"medium_ref", 21}, {"large_ref", 123}};
  for (auto& [name, n] : expected) {
    auto g = load_grammar(name);
    EXPECT_EQ(count_combinations(g), n) << name;
    EXPECT_EQ(oracle::count_combinations(g), static_cast<std::size_t>(n)) << name;
    EXPECT_EQ(list_skeletons(g).size(), static_cast<std::size_t>(n)) << name;
  }
}

TEST(Grammar, AlgorithmLevelRecursionIsUnsupported) {
  auto g = parse_grammar("<m> ::= alg\"ensemble\" <m> | alg\"BR\"\n");
  EXPECT_THROW(count_combinations(g), UnsupportedError);
}

TEST(Grammar, SpeciesMasks) {
  auto base = load_grammar("large_ref");
  EXPECT_EQ(species_grammar(base, 8), base);

  auto s1 = species_grammar(base, 1);
  for (auto kind : {TerminalKind::categorical, TerminalKind::integer, TerminalKind::real})
    EXPECT_FALSE(has_hyperparameters(s1, kind));
  EXPECT_EQ(count_combinations(s1), count_combinations(base));

  auto s4 = species_grammar(base, 4);
  EXPECT_TRUE(has_hyperparameters(s4, TerminalKind::real));
  EXPECT_FALSE(has_hyperparameters(s4, TerminalKind::integer));
  EXPECT_FALSE(has_hyperparameters(s4, TerminalKind::categorical));

  EXPECT_THROW(species_grammar(base, 0), std::invalid_argument);
  EXPECT_THROW(species_grammar(base, 9), std::invalid_argument);
}

TEST(Grammar, SpeciesTreesKeepFrozenDefaults) {
  auto base = load_grammar("large_ref");
  for (int s = 1; s <= 8; ++s) {
    auto g = species_grammar(base, s);
    Rng rng(static_cast<std::uint64_t>(s));
    for (int i = 0; i < 300; ++i) {
      auto cfg = map_to_config(grow(g, rng), g);
      auto t = derive(base, cfg);
      ASSERT_TRUE(t) << cfg.to_string();
      EXPECT_TRUE(oracle::frozen_at_defaults(*t, base, s)) << "species " << s << ": " << cfg.to_string();
    }
  }
}

TEST(Grammar, ConformResetsFrozenSlots) {
  auto base = load_grammar("small_ref");
  auto t = *derive(base, PipelineConfig::parse("PS(prune_threshold=7, threshold=0.2, base=knn(k=12))"));
  auto s4 = species_grammar(base, 4);
  auto c = conform(t, s4);
  ASSERT_TRUE(validate(c, s4));
  EXPECT_EQ(map_to_config(c, s4).to_string(), "PS(prune_threshold=2, threshold=0.2, base=knn(k=5))");
}

TEST(Grammar, InitDerives) {
  for (auto name : {"tiny_ref", "small_ref", "medium_ref", "large_ref"}) {
    auto g = load_grammar(name);
    auto t = derive(g, parse_expression(*g.init));
    ASSERT_TRUE(t) << name;
    EXPECT_TRUE(validate(*t, g));
  }
}

TEST(Grammar, GrowRespectsDepth) {
  auto g = load_grammar("large_ref");
  Rng rng(3);
  EXPECT_THROW(grow(g, rng, g.min_depth[0] - 1), std::invalid_argument);
  for (int i = 0; i < 500; ++i) EXPECT_LE(tree_height(grow(g, rng, g.min_depth[0] + 1)), g.min_depth[0] + 1);
}
