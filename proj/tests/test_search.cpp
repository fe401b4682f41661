#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "automlc/search/search.hpp"
#include "support.hpp"

using namespace automlc;
using testing_support::load_grammar;

namespace {

SearchConfig tiny_config(Method m, std::uint64_t seed) {
  SearchConfig c;
  c.method = m;
  c.seed = seed;
  c.population = 20;
  c.per_species = 5;
  c.p = 10;
  c.candidates_per_round = 100;
  return c;
}

Budget evaluations(std::size_t n) {
  Budget b;
  b.max_evaluations = n;
  return b;
}

double tiny_optimum(const Grammar& g, double (*surface)(const PipelineConfig&)) {
  double best = -1;
  for (auto& t : enumerate_trees(g)) best = std::max(best, surface(map_to_config(t, g)));
  return best;
}

std::string trace_csv(const SearchResult& r) {
  std::ostringstream os;
  r.trace.write_csv(os, true);
  return os.str();
}

}  // namespace

TEST(Search, EveryMethodFindsTinyOptimum) {
  auto g = load_grammar("tiny_ref");
  const double opt = tiny_optimum(g, testing_support::rugged_surface);
  FunctionObjective obj([](const PipelineConfig& c, const std::string&) { return testing_support::rugged_surface(c); });
  for (auto m : {Method::ggp, Method::spggp, Method::bo, Method::rs}) {
    auto r = run_search(g, obj, tiny_config(m, 11), evaluations(200));
    EXPECT_EQ(r.best_fitness, opt) << method_name(m);
  }
  const double uni = tiny_optimum(g, testing_support::unimodal_surface);
  FunctionObjective smooth([](const PipelineConfig& c, const std::string&) { return testing_support::unimodal_surface(c); });
  auto r = run_search(g, smooth, tiny_config(Method::gs, 11), evaluations(200));
  EXPECT_EQ(r.best_fitness, uni);
  EXPECT_EQ(r.best_expression, "CC(threshold=0.7, base=knn(k=3))");
}

TEST(Search, RandomSearchReliability) {
  auto g = load_grammar("tiny_ref");
  const double opt = tiny_optimum(g, testing_support::rugged_surface);
  FunctionObjective obj([](const PipelineConfig& c, const std::string&) { return testing_support::rugged_surface(c); });
  int hits = 0;
  for (std::uint64_t s = 0; s < 20; ++s) hits += run_rs(g, obj, tiny_config(Method::rs, s), evaluations(200)).best_fitness == opt;
  EXPECT_GE(hits, 19);
}

TEST(Search, BayesianOptimisationStartsFromInit) {
  FunctionObjective obj([](const PipelineConfig&, const std::string&) { return 0.5; });
  for (auto name : {"small_ref", "medium_ref", "large_ref"}) {
    auto g = load_grammar(name);
    auto r = run_bo(g, obj, tiny_config(Method::bo, 3), evaluations(3));
    ASSERT_FALSE(r.trace.records.empty());
    auto init = map_to_config(*derive(g, parse_expression(*g.init)), g).to_string();
    EXPECT_EQ(r.trace.records.front().expression, init) << name;
  }
}

TEST(Search, ForestBeatsConstantPredictor) {
  Rng rng(5);
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (int i = 0; i < 200; ++i) {
    double v = uniform_real(rng, -1, 1);
    x.push_back({v});
    y.push_back(v * v);
  }
  RandomForestRegressor::Options opt;
  opt.feature_fraction = 1.0;
  RandomForestRegressor forest(opt);
  forest.fit(x, y, rng);
  const double mean_y = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double mse = 0, base = 0;
  for (int i = 0; i < 200; ++i) {
    double v = -1 + 2 * (i + 0.5) / 200.0;
    auto p = forest.predict({v});
    EXPECT_GE(p.variance, 0.0);
    mse += (p.mean - v * v) * (p.mean - v * v);
    base += (mean_y - v * v) * (mean_y - v * v);
  }
  EXPECT_LT(mse, 0.1 * base);
}

TEST(Search, ExpectedImprovement) {
  EXPECT_DOUBLE_EQ(expected_improvement(0.8, 0.0, 0.5, 0.01), 0.29);
  EXPECT_DOUBLE_EQ(expected_improvement(0.3, 0.0, 0.5, 0.01), 0.0);
  // Zero mean gain: EI = sd * phi(0).
  EXPECT_NEAR(expected_improvement(0.5, 0.04, 0.5, 0.0), 0.2 / std::sqrt(2 * M_PI), 1e-12);
  // Increasing in mean and in spread.
  EXPECT_GT(expected_improvement(0.6, 0.01, 0.5, 0.0), expected_improvement(0.55, 0.01, 0.5, 0.0));
  EXPECT_GT(expected_improvement(0.4, 0.04, 0.5, 0.0), expected_improvement(0.4, 0.01, 0.5, 0.0));
}

TEST(Search, EncoderProperties) {
  auto g = load_grammar("large_ref");
  ConfigEncoder enc(g);
  Rng rng(6);
  for (int i = 0; i < 200; ++i) EXPECT_EQ(enc.encode(grow(g, rng)).size(), enc.dimensions());

  auto diff = [&](const char* a, const char* b) {
    auto va = enc.encode(PipelineConfig::parse(a)), vb = enc.encode(PipelineConfig::parse(b));
    std::size_t n = 0;
    for (std::size_t i = 0; i < va.size(); ++i) n += va[i] != vb[i];
    return n;
  };
  EXPECT_EQ(diff("BR(threshold=0.5, base=knn(k=5))", "BR(threshold=0.5, base=knn(k=6))"), 1u);
  EXPECT_EQ(diff("BR(threshold=0.5, base=knn(k=5))", "BR(threshold=0.6, base=knn(k=5))"), 1u);
  // A meta layer at its default size only switches the choice and raises one activity flag.
  EXPECT_EQ(diff("BR(threshold=0.5, base=gaussian-nb)", "ensemble-mlc(n=5, threshold=0.5, base=BR(base=gaussian-nb))"), 2u);
  EXPECT_THROW(enc.encode(PipelineConfig::parse("BR(base=svm)")), std::invalid_argument);

  auto tiny = load_grammar("tiny_ref");
  ConfigEncoder te(tiny);
  std::set<std::vector<double>> codes;
  for (auto& t : enumerate_trees(tiny)) codes.insert(te.encode(t));
  EXPECT_EQ(codes.size(), 45u);
}

TEST(Search, GreedyParentIsIncumbent) {
  auto g = load_grammar("small_ref");
  FunctionObjective obj([](const PipelineConfig& c, const std::string& e) {
    return 0.5 * c.effective_threshold() + 0.5 * static_cast<double>(hash_string(e) % 1000) / 1000.0;
  });
  auto cfg = tiny_config(Method::gs, 7);
  auto r = run_gs(g, obj, cfg, evaluations(150));
  const auto& recs = r.trace.records;
  ASSERT_GT(recs.size(), 10u);
  EXPECT_FALSE(recs[0].parent);
  // Every neighbour of a batch descends from the best record of earlier batches.
  for (std::size_t i = 1; i < recs.size(); ++i) {
    ASSERT_TRUE(recs[i].parent);
    const auto p = *recs[i].parent;
    ASSERT_LT(recs[p].iteration, recs[i].iteration);
    for (std::size_t j = 0; j < i; ++j)
      if (recs[j].iteration < recs[i].iteration) {
        EXPECT_GE(recs[p].report.fitness, recs[j].report.fitness);
      }
  }
}

TEST(Search, IncumbentIsNondecreasing) {
  auto g = load_grammar("small_ref");
  FunctionObjective obj([](const PipelineConfig&, const std::string& e) { return static_cast<double>(hash_string(e) % 997) / 997.0; });
  for (auto m : {Method::ggp, Method::spggp, Method::bo, Method::rs, Method::gs}) {
    auto r = run_search(g, obj, tiny_config(m, 8), evaluations(120));
    const auto& inc = r.trace.incumbents;
    ASSERT_FALSE(inc.empty());
    for (std::size_t i = 1; i < inc.size(); ++i) EXPECT_GT(inc[i].fitness, inc[i - 1].fitness) << method_name(m);
    double best = 0;
    for (auto& rec : r.trace.records) best = std::max(best, rec.report.fitness);
    EXPECT_EQ(r.best_fitness, best);
    EXPECT_EQ(inc.back().expression, r.best_expression);
  }
}

TEST(Search, Deterministic) {
  auto g = load_grammar("medium_ref");
  FunctionObjective obj([](const PipelineConfig& c, const std::string& e) {
    return 0.3 * c.effective_threshold() + 0.5 * static_cast<double>(hash_string(e) % 1000) / 1000.0;
  });
  for (auto m : {Method::ggp, Method::spggp, Method::bo, Method::rs, Method::gs}) {
    auto a = run_search(g, obj, tiny_config(m, 9), evaluations(80));
    auto b = run_search(g, obj, tiny_config(m, 9), evaluations(80));
    EXPECT_EQ(trace_csv(a), trace_csv(b)) << method_name(m);
    auto c = run_search(g, obj, tiny_config(m, 10), evaluations(80));
    EXPECT_NE(trace_csv(a), trace_csv(c)) << method_name(m);
  }
}

TEST(Search, SingleSpeciesMatchesGgp) {
  auto g = load_grammar("small_ref");
  FunctionObjective obj([](const PipelineConfig&, const std::string& e) { return static_cast<double>(hash_string(e) % 991) / 991.0; });
  auto cfg = tiny_config(Method::ggp, 12);
  cfg.population = 30;
  auto a = run_ggp(g, obj, cfg, evaluations(200));
  cfg.species_count = 1;
  cfg.per_species = 30;
  cfg.intra_crossover = 1;
  cfg.inter_crossover = 0;
  auto b = run_spggp(g, obj, cfg, evaluations(200));
  ASSERT_EQ(a.trace.records.size(), b.trace.records.size());
  for (std::size_t i = 0; i < a.trace.records.size(); ++i) {
    EXPECT_EQ(a.trace.records[i].expression, b.trace.records[i].expression);
    EXPECT_EQ(b.trace.records[i].species, 8);
  }
}

TEST(Search, EvaluationBudgetTruncates) {
  auto g = load_grammar("small_ref");
  FunctionObjective obj([](const PipelineConfig&, const std::string&) { return 0.1; });
  for (auto m : {Method::ggp, Method::spggp, Method::bo, Method::rs, Method::gs}) {
    auto r = run_search(g, obj, tiny_config(m, 13), evaluations(7));
    std::size_t fresh = 0;
    for (auto& rec : r.trace.records) fresh += !rec.cached;
    EXPECT_EQ(fresh, 7u) << method_name(m);
  }
}

TEST(Search, ConvergedSearchTerminatesOnCacheHits) {
  auto g = parse_grammar("<s> ::= alg\"BR\" <b>\n<b> ::= alg\"gaussian-nb\" | alg\"knn\"\n");
  FunctionObjective obj([](const PipelineConfig&, const std::string&) { return 0.4; });
  auto r = run_ggp(g, obj, tiny_config(Method::ggp, 14), evaluations(10));
  EXPECT_LE(r.trace.records.size(), 50u);
  std::size_t fresh = 0;
  for (auto& rec : r.trace.records) fresh += !rec.cached;
  EXPECT_LE(fresh, 2u);
}

TEST(Search, RestartAfterStagnation) {
  auto g = load_grammar("small_ref");
  FunctionObjective obj([](const PipelineConfig&, const std::string&) { return 0.5; });
  auto cfg = tiny_config(Method::ggp, 15);
  cfg.population = 10;
  auto r = run_ggp(g, obj, cfg, evaluations(400));
  ASSERT_FALSE(r.trace.restarts.empty());
  EXPECT_EQ(r.trace.restarts.front().generation, 20u);
}

TEST(Search, EvaluateCandidateOnSeparableData) {
  auto ds = testing_support::separable_dataset(80, 3, 16);
  auto [learn, valid] = split_learn_validation(ds, 0.3, 17);
  auto ev = evaluate_candidate(PipelineConfig::parse("BR(base=gaussian-nb)"), learn, valid, Budget{}, 1);
  EXPECT_FALSE(ev.violation);
  EXPECT_TRUE(ev.reason.empty());
  EXPECT_DOUBLE_EQ(ev.fitness(), 1.0);

  auto bad = evaluate_candidate(PipelineConfig::parse("BR(base=svm)"), learn, valid, Budget{}, 1);
  EXPECT_EQ(bad.fitness(), 0.0);
  EXPECT_FALSE(bad.violation);
  EXPECT_EQ(bad.reason.rfind("error: ", 0), 0u);

  Budget tight;
  tight.model_size_cap = 2;
  auto big = evaluate_candidate(PipelineConfig::parse("BR(base=gaussian-nb)"), learn, valid, tight, 1);
  EXPECT_TRUE(big.violation);
  EXPECT_EQ(big.reason, "model_size");
  EXPECT_EQ(big.fitness(), 0.0);
}

TEST(Search, TimeViolationGetsZeroFitness) {
  auto ds = testing_support::separable_dataset(400, 4, 18);
  auto [learn, valid] = split_learn_validation(ds, 0.3, 19);
  Budget tight;
  tight.per_candidate_seconds = 1e-7;
  auto ev = evaluate_candidate(PipelineConfig::parse("ensemble-mlc(n=10, base=CC(base=logistic-regression))"), learn, valid, tight, 1);
  EXPECT_TRUE(ev.violation);
  EXPECT_EQ(ev.reason, "time");
  EXPECT_EQ(ev.fitness(), 0.0);
}

TEST(Search, TraceCsvHeader) {
  auto g = load_grammar("tiny_ref");
  FunctionObjective obj([](const PipelineConfig&, const std::string&) { return 0.25; });
  auto r = run_rs(g, obj, tiny_config(Method::rs, 20), evaluations(3));
  auto csv = trace_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "iteration,species,expression,em,hl,fm,rl,fitness,seconds,violation");
  auto j = r.trace.to_json(true);
  EXPECT_EQ(j["records"].size(), r.trace.records.size());
}

TEST(Search, ConfigValidation) {
  SearchConfig c;
  c.p_crossover = 0.9;
  c.p_mutation = 0.2;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = SearchConfig{};
  c.species_count = 9;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = SearchConfig{};
  EXPECT_TRUE(c.set("intra_crossover", "0.7"));
  EXPECT_DOUBLE_EQ(c.inter_crossover, 0.3);
  EXPECT_FALSE(c.set("no_such_key", "1"));
  EXPECT_THROW(c.set("population", "-1"), std::invalid_argument);
  EXPECT_EQ(parse_method("spggp"), Method::spggp);
  EXPECT_THROW(parse_method("sa"), std::invalid_argument);
}
