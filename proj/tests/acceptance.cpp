// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "automlc/automlc.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace automlc;
using testing_support::load_grammar;
using testing_support::read_file;
using testing_support::source_path;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// 1. Metric values against the brute-force definitions.
Outcome metric_oracle() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  for (int c = 0; c < 500; ++c) {
    const std::size_t n = 1 + rng() % 8, q = 1 + rng() % 4;
    auto t = testing_support::random_binary(n, q, rng);
    auto p = testing_support::random_binary(n, q, rng);
    RealMatrix s(n, q);
    for (auto& v : s.data()) v = static_cast<double>(rng() % 5) / 4.0;
    auto rep = evaluate_predictions(p, s, t);
    std::size_t skipped = 0;
    o.require(std::abs(rep.em - oracle::em(p, t)) <= 1e-12, "EM mismatch at case " + std::to_string(c));
    o.require(std::abs(rep.hl - oracle::hl(p, t)) <= 1e-12, "HL mismatch at case " + std::to_string(c));
    o.require(std::abs(rep.fm - oracle::fm(p, t)) <= 1e-12, "FM mismatch at case " + std::to_string(c));
    o.require(std::abs(rep.rl - oracle::rl(s, t, skipped)) <= 1e-12, "RL mismatch at case " + std::to_string(c));
    o.require(rep.fitness == (rep.em + (1.0 - rep.hl) + rep.fm + (1.0 - rep.rl)) / 4.0,
              "fitness identity broken at case " + std::to_string(c));
  }
  const double secs = seconds_since(t0);
  o.require(secs < 5, "took " + fmt(secs) + " s");
  if (o.pass) o.detail = "500 cases in " + fmt(secs) + " s";
  return o;
}

// 2. Grow, mutation and crossover stay inside the grammar and build.
Outcome grammar_closure() {
  Outcome o;
  const auto t0 = Clock::now();
  auto g = load_grammar("large_ref");
  Rng rng(99);
  std::size_t failures = 0;
  auto check = [&](const DerivationTree& t) {
    if (!validate(t, g)) {
      ++failures;
      return;
    }
    try {
      build_pipeline(map_to_config(t, g));
    } catch (const std::exception&) {
      ++failures;
    }
  };
  std::vector<Individual> pool;
  for (int i = 0; i < 10000; ++i) {
    Individual ind;
    ind.tree = grow(g, rng);
    ind.fitness = 0;
    check(ind.tree);
    if (pool.size() < 100) pool.push_back(ind);
    else pool[uniform_index(rng, pool.size())] = ind;
  }
  for (int i = 0; i < 10000; ++i) {
    auto m = whigham_mutation(pool[uniform_index(rng, pool.size())], g, g.max_depth, rng);
    check(m.tree);
    m.fitness = 0;
    pool[uniform_index(rng, pool.size())] = std::move(m);
  }
  for (int i = 0; i < 10000; ++i) {
    auto [c1, c2] = whigham_crossover(pool[uniform_index(rng, pool.size())], pool[uniform_index(rng, pool.size())], g, g,
                                      g.max_depth, rng);
    check(c1.tree);
    c1.fitness = 0;
    pool[uniform_index(rng, pool.size())] = std::move(c1);
  }
  const double secs = seconds_since(t0);
  o.require(failures == 0, std::to_string(failures) + " invalid or unbuildable trees");
  o.require(secs < 30, "took " + fmt(secs) + " s");
  if (o.pass) o.detail = "30000 operations, 0 failures, " + fmt(secs) + " s";
  return o;
}

int run_cli(const std::string& args, const std::filesystem::path& out) {
  const std::string cmd = std::string("\"") + AUTOMLC_CLI + "\" " + args + " > \"" + out.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// 3. Combination counts.
Outcome combination_count() {
  Outcome o;
  auto log = std::filesystem::temp_directory_path() / "automlc_acceptance_enumerate.txt";
  const int rc = run_cli("enumerate \"" + source_path("grammars/small_ref.grammar") + "\"", log);
  const auto printed = read_file(log.string());
  o.require(rc == 0 && printed == "21\n", "enumerate small_ref printed '" + printed + "'");
  std::string counts;
  for (auto name : {"tiny_ref", "small_ref", "medium_ref", "large_ref"}) {
    auto g = load_grammar(name);
    const auto lib = count_combinations(g);
    const auto ref = oracle::count_combinations(g);
    o.require(lib == ref, std::string(name) + ": " + lib.str() + " vs oracle " + std::to_string(ref));
    counts += std::string(counts.empty() ? "" : ", ") + name + "=" + lib.str();
  }
  if (o.pass) o.detail = counts;
  return o;
}

// 4. Speciated runs never move a frozen hyperparameter off its default.
Outcome speciation_invariant() {
  Outcome o;
  auto base = load_grammar("large_ref");
  o.require(species_grammar(base, 8) == base, "species 8 changed the grammar");
  auto ds = load_dataset(source_path("data/tiny.arff"));
  DatasetObjective objective(ds, 5);
  SearchConfig cfg;
  cfg.method = Method::spggp;
  cfg.per_species = 4;
  cfg.seed = 21;
  Budget budget;
  budget.max_evaluations = 4 * 8 * 26;
  auto r = run_spggp(base, objective, cfg, budget);
  std::size_t last_gen = 0, checked = 0;
  std::set<int> species_seen;
  for (auto& rec : r.trace.records) {
    last_gen = std::max(last_gen, rec.iteration);
    if (!rec.species) {
      o.require(false, "record without species tag");
      continue;
    }
    species_seen.insert(*rec.species);
    auto t = derive(base, PipelineConfig::parse(rec.expression));
    o.require(t.has_value(), "not derivable: " + rec.expression);
    if (!t) continue;
    o.require(oracle::frozen_at_defaults(*t, base, *rec.species),
              "species " + std::to_string(*rec.species) + " moved a frozen value: " + rec.expression);
    ++checked;
  }
  o.require(last_gen >= 20, "run stopped at generation " + std::to_string(last_gen));
  o.require(species_seen.size() == 8, "only " + std::to_string(species_seen.size()) + " species logged");
  if (o.pass) o.detail = std::to_string(checked) + " individuals over " + std::to_string(last_gen) + " generations";
  return o;
}

// 5. Searches reach the exhaustively enumerated optimum of tiny_ref.
Outcome search_vs_enumeration() {
  Outcome o;
  const auto t0 = Clock::now();
  auto g = load_grammar("tiny_ref");
  auto trees = enumerate_trees(g);
  o.require(trees.size() <= 60, "tiny_ref has " + std::to_string(trees.size()) + " configurations");
  double rugged_opt = -1, smooth_opt = -1;
  for (auto& t : trees) {
    auto c = map_to_config(t, g);
    rugged_opt = std::max(rugged_opt, testing_support::rugged_surface(c));
    smooth_opt = std::max(smooth_opt, testing_support::unimodal_surface(c));
  }
  FunctionObjective rugged([](const PipelineConfig& c, const std::string&) { return testing_support::rugged_surface(c); });
  FunctionObjective smooth([](const PipelineConfig& c, const std::string&) { return testing_support::unimodal_surface(c); });
  Budget budget;
  budget.max_evaluations = 200;

  struct Target {
    Method method;
    int needed;
    bool unimodal;
  };
  std::string summary;
  for (auto [method, needed, unimodal] : {Target{Method::ggp, 4, false}, Target{Method::spggp, 4, false}, Target{Method::bo, 4, false},
                                          Target{Method::rs, 3, false}, Target{Method::gs, 5, true}}) {
    int hits = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      SearchConfig cfg;
      cfg.method = method;
      cfg.seed = seed;
      cfg.population = 20;
      cfg.per_species = 5;
      cfg.p = 10;
      cfg.candidates_per_round = 200;
      auto r = run_search(g, unimodal ? smooth : rugged, cfg, budget);
      std::size_t fresh = 0;
      for (auto& rec : r.trace.records) fresh += !rec.cached;
      hits += fresh <= 200 && r.best_fitness == (unimodal ? smooth_opt : rugged_opt);
    }
    o.require(hits >= needed, std::string(method_name(method)) + " hit " + std::to_string(hits) + "/5");
    summary += std::string(summary.empty() ? "" : ", ") + method_name(method) + " " + std::to_string(hits) + "/5";
  }
  const double secs = seconds_since(t0);
  o.require(secs < 60, "took " + fmt(secs) + " s");
  if (o.pass) o.detail = summary + ", " + fmt(secs) + " s";
  return o;
}

/// Sleeps for a fixed time per candidate, longer for knn pipelines, polling
/// the deadline.
class SlowObjective final : public Objective {
 public:
  Evaluation evaluate(const PipelineConfig& cfg, std::uint64_t, std::size_t, const Deadline& deadline) override {
    const auto t0 = Clock::now();
    const bool slow = cfg.mlc.base && cfg.mlc.base->algorithm == "knn";
    const double work = slow ? 5.0 : 0.02;
    Evaluation ev;
    while (seconds_since(t0) < work) {
      if (deadline.expired()) {
        ev.report = zero_report();
        ev.violation = true;
        ev.reason = "time";
        ev.seconds = seconds_since(t0);
        return ev;
      }
      std::this_thread::sleep_for(std::chrono::microseconds(200));
    }
    ev.report = surface_report(0.5);
    ev.seconds = seconds_since(t0);
    return ev;
  }
};

// 6. Slow candidates get fitness 0 with the flag; runs respect the wall clock.
Outcome budget_enforcement() {
  Outcome o;
  auto g = load_grammar("tiny_ref");
  Budget budget;
  budget.total_seconds = 0.5;
  budget.per_candidate_seconds = 0.1;
  double worst = 0;
  std::size_t slow_seen = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SlowObjective obj;
    SearchConfig cfg;
    cfg.method = Method::rs;
    cfg.seed = seed;
    cfg.p = 5;
    const auto t0 = Clock::now();
    auto r = run_search(g, obj, cfg, budget);
    const double secs = seconds_since(t0);
    worst = std::max(worst, secs);
    o.require(secs <= budget.total_seconds + budget.per_candidate_seconds, "run " + std::to_string(seed) + " took " + fmt(secs) + " s");
    for (auto& rec : r.trace.records) {
      const bool slow = rec.expression.find("base=knn") != std::string::npos;
      if (!slow) continue;
      ++slow_seen;
      o.require(rec.violation && rec.report.fitness == 0 && rec.reason == "time", "slow candidate not penalised: " + rec.expression);
    }
  }
  o.require(slow_seen > 0, "no slow candidate was drawn");

  // The same through a real fit.
  auto ds = testing_support::separable_dataset(400, 4, 3);
  auto [learn, valid] = split_learn_validation(ds, 0.3, 4);
  Budget tight;
  tight.per_candidate_seconds = 1e-4;
  auto ev = evaluate_candidate(PipelineConfig::parse("ensemble-mlc(n=10, base=CC(base=logistic-regression))"), learn, valid, tight, 1);
  o.require(ev.violation && ev.fitness() == 0 && ev.reason == "time", "real fit not stopped: " + ev.reason);
  if (o.pass) o.detail = "10 runs, slowest " + fmt(worst) + " s (limit 0.6 s), " + std::to_string(slow_seen) + " slow candidates penalised";
  return o;
}

// 7. Restart exactly when stagnation meets the minimum run length.
Outcome restart_behaviour() {
  Outcome o;
  auto g = load_grammar("small_ref");
  FunctionObjective flat([](const PipelineConfig&, const std::string&) { return 0.5; });
  SearchConfig cfg;
  cfg.method = Method::ggp;
  cfg.population = 10;
  cfg.seed = 7;
  Budget budget;
  budget.max_evaluations = 400;
  auto r = run_ggp(g, flat, cfg, budget);
  o.require(!r.trace.restarts.empty(), "no restart recorded");
  if (!r.trace.restarts.empty())
    o.require(r.trace.restarts.front().generation == 20,
              "first restart at generation " + std::to_string(r.trace.restarts.front().generation));
  if (o.pass) o.detail = "first restart at generation 20";
  return o;
}

// 8. Critical difference, published conclusion set and the hand-worked Friedman case.
Outcome statistics() {
  Outcome o;
  const double cd = nemenyi_cd(5, 14, 0.05);
  o.require(std::abs(cd - 1.630) <= 0.005, "CD = " + fmt(cd));
  std::vector<double> ranks{2.607, 2.429, 2.571, 4.286, 3.107};
  auto lines = format_conclusions(pairwise_conclusions(ranks, cd), {"spGGP", "GGP", "BO", "RS", "GS"});
  o.require(lines == std::vector<std::string>{"{spGGP, GGP, BO} ≻ {RS}"}, "conclusions differ");
  ResultMatrix rm;
  rm.values = RealMatrix{{0.9, 0.5, 0.1}, {0.8, 0.6, 0.2}, {0.7, 0.4, 0.3}, {0.95, 0.9, 0.85}};
  const double chi2 = friedman_test(rm, 0.05).chi2;
  o.require(std::abs(chi2 - 8.0) < 1e-12, "chi2_F = " + fmt(chi2));
  if (o.pass) o.detail = "CD " + fmt(cd) + ", " + lines[0] + ", chi2_F " + fmt(chi2);
  return o;
}

// 9. Iterative stratification against random splits.
Outcome stratification_quality() {
  Outcome o;
  std::mt19937_64 rng(31);
  const std::size_t n = 200, q = 6, k = 5;
  const double rate[q] = {0.45, 0.25, 0.12, 0.06, 0.03, 0.015};
  BinaryMatrix y(n, q);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < q; ++j) y(i, j) = std::bernoulli_distribution(rate[j])(rng);
  auto ds = make_dataset("skewed", testing_support::random_real(n, 3, rng), y);
  auto fa = iterative_stratified_kfold(ds, k, 1);
  std::vector<std::size_t> all;
  for (std::size_t f = 0; f < k; ++f) {
    auto m = fa.members(f);
    all.insert(all.end(), m.begin(), m.end());
  }
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> expect(n);
  std::iota(expect.begin(), expect.end(), 0);
  o.require(all == expect, "folds do not partition the dataset");
  const auto strat = oracle::worst_imbalance(ds, fa);
  std::vector<std::size_t> random;
  for (int r = 0; r < 200; ++r) {
    FoldAssignment ra{std::vector<std::size_t>(n), k};
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < n; ++i) ra.fold_of[perm[i]] = i % k;
    random.push_back(oracle::worst_imbalance(ds, ra));
  }
  std::sort(random.begin(), random.end());
  const auto median = random[random.size() / 2];
  o.require(strat <= median, "stratified " + std::to_string(strat) + " > random median " + std::to_string(median));
  if (o.pass) o.detail = "worst imbalance " + std::to_string(strat) + " vs random median " + std::to_string(median);
  return o;
}

// 10. Two CLI runs of the bundled experiment produce identical files.
Outcome end_to_end_determinism() {
  Outcome o;
  namespace fs = std::filesystem;
  const auto root = fs::temp_directory_path() / "automlc_acceptance_e2e";
  fs::remove_all(root);
  fs::create_directories(root);
  const auto cfg = source_path("configs/tiny_experiment.cfg");
  for (auto run : {"a", "b"}) {
    const int rc = run_cli("run \"" + cfg + "\" --output-dir \"" + (root / run).string() + "\"", root / (std::string(run) + ".log"));
    o.require(rc == 0, std::string("run ") + run + " exited with " + std::to_string(rc));
  }
  if (!o.pass) return o;
  std::ifstream in(root / "a" / "results.csv");
  const auto rows = read_results_csv(in);
  o.require(rows.size() == 10, "expected 10 rows, got " + std::to_string(rows.size()));
  std::size_t compared = 0;
  for (auto& entry : fs::recursive_directory_iterator(root / "a")) {
    if (!entry.is_regular_file()) continue;
    auto rel = fs::relative(entry.path(), root / "a");
    auto other = root / "b" / rel;
    o.require(fs::exists(other) && read_file(entry.path().string()) == read_file(other.string()), "differs: " + rel.string());
    compared += entry.path().extension() == ".csv";
  }
  if (o.pass) o.detail = "10 rows, " + std::to_string(compared) + " CSV files byte-identical";
  return o;
}

// 11. density = cardinality / q on every bundled dataset; Flags-shaped values.
Outcome dataset_identity() {
  Outcome o;
  namespace fs = std::filesystem;
  std::size_t loaded = 0;
  for (auto& entry : fs::directory_iterator(source_path("data"))) {
    if (entry.path().extension() != ".arff") continue;
    auto ds = load_dataset(entry.path().string());
    auto s = label_stats(ds);
    o.require(s.density == s.cardinality / static_cast<double>(ds.q()), "identity fails on " + entry.path().filename().string());
    ++loaded;
  }
  auto flags = label_stats(load_dataset(source_path("data/flags_like.arff")));
  o.require(std::abs(flags.cardinality - 3.392) <= 0.001, "cardinality " + fmt(flags.cardinality));
  o.require(std::abs(flags.density - 0.485) <= 0.001, "density " + fmt(flags.density));
  if (o.pass)
    o.detail = std::to_string(loaded) + " datasets; flags_like " + fmt(flags.cardinality) + "/7 = " + fmt(flags.density);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"metric oracle equivalence", metric_oracle},
      {"grammar closure", grammar_closure},
      {"combination count", combination_count},
      {"speciation invariant", speciation_invariant},
      {"search vs enumeration", search_vs_enumeration},
      {"budget enforcement", budget_enforcement},
      {"restart behaviour", restart_behaviour},
      {"statistics", statistics},
      {"stratification quality", stratification_quality},
      {"end-to-end determinism", end_to_end_determinism},
      {"dataset identity", dataset_identity},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << i + 1 << ". " << criteria[i].first << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
