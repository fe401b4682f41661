#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "automlc/automlc.hpp"

namespace {

int cmd_run(const std::string& path, const std::optional<std::uint64_t>& seed, const std::optional<std::size_t>& jobs,
            const std::optional<double>& budget, const std::optional<double>& per_candidate,
            const std::optional<std::string>& output_dir) {
  using namespace automlc;
  ExperimentConfig cfg;
  try {
    cfg = ExperimentConfig::load(path);
    if (seed) cfg.set("seeds", std::to_string(*seed));
    if (jobs) cfg.set("jobs", std::to_string(*jobs));
    if (budget) cfg.set("budget_secs", text::format_real(*budget));
    if (per_candidate) cfg.set("per_candidate_secs", text::format_real(*per_candidate));
    if (output_dir) cfg.output_dir = *output_dir;
    cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }
  try {
    auto result = run_experiment(cfg, &std::cerr);
    std::size_t failed = 0;
    for (auto& r : result.rows) failed += r.error.empty() ? 0 : 1;
    std::cout << result.rows.size() << " cells, " << failed << " with errors\n";
    for (auto& f : result.files) std::cout << f << "\n";
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int cmd_describe(const std::string& path, const std::optional<std::string>& labels, bool json) {
  using namespace automlc;
  std::optional<CsvLabelSpec> spec;
  if (labels) spec = CsvLabelSpec::parse(*labels);
  auto ds = load_dataset(path, spec);
  auto d = describe_dataset(ds);
  if (json) {
    std::cout << d.dump(2) << "\n";
    return 0;
  }
  std::cout << "name         " << d["name"].get<std::string>() << "\n"
            << "n            " << ds.n() << "\n"
            << "m            " << ds.m() << "\n"
            << "q            " << ds.q() << "\n"
            << "cardinality  " << text::format_real(d["cardinality"].get<double>()) << "\n"
            << "density      " << text::format_real(d["density"].get<double>()) << "\n"
            << "diversity    " << text::format_real(d["diversity"].get<double>()) << "\n";
  return 0;
}

int cmd_enumerate(const std::string& path, bool list) {
  using namespace automlc;
  std::ifstream in(path);
  if (!in) throw automlc::ConfigError("cannot open grammar '" + path + "'");
  auto g = parse_grammar(in);
  std::cout << count_combinations(g) << "\n";
  if (list)
    for (auto& s : list_skeletons(g)) std::cout << s << "\n";
  return 0;
}

int cmd_stats(const std::string& path, const std::string& measure, double alpha) {
  using namespace automlc;
  std::ifstream in(path);
  if (!in) throw automlc::ConfigError("cannot open results '" + path + "'");
  auto rows = read_results_csv(in);
  auto rm = result_matrix(rows, measure);
  std::cout << analyse(rm, measure, alpha).to_text();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AutoML search for multi-label classification pipelines"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<double> budget, per_candidate;
  std::optional<std::string> output_dir;

  std::string run_config;
  auto* run = app.add_subcommand("run", "Run an experiment described by a config file");
  run->add_option("config", run_config, "Experiment config")->required();
  run->add_option("--seed", seed, "Run a single seed instead of the configured list");
  run->add_option("--jobs", jobs, "Cells to run concurrently");
  run->add_option("--budget-secs", budget, "Wall-clock budget per search run");
  run->add_option("--per-candidate-secs", per_candidate, "Wall-clock budget per candidate evaluation");
  run->add_option("--output-dir", output_dir, "Directory for result files");

  std::string describe_path;
  std::optional<std::string> labels;
  bool describe_json = false;
  auto* describe = app.add_subcommand("describe", "Summarise a dataset");
  describe->add_option("dataset", describe_path, "ARFF or CSV file")->required();
  describe->add_option("--labels", labels, "Label columns of a CSV file: first:<q> or last:<q>");
  describe->add_flag("--json", describe_json, "Print JSON");

  std::string grammar_path;
  bool list = false;
  auto* enumerate = app.add_subcommand("enumerate", "Count the algorithm combinations of a grammar");
  enumerate->add_option("grammar", grammar_path, "Grammar file")->required();
  enumerate->add_flag("--list", list, "Also print each combination");

  std::string results_path, measure = "fitness";
  double alpha = 0.05;
  auto* stats = app.add_subcommand("stats", "Friedman and Nemenyi analysis of a results CSV");
  stats->add_option("results", results_path, "results.csv from a run")->required();
  stats->add_option("--measure", measure, "em, hl, fm, rl or fitness");
  stats->add_option("--alpha", alpha, "Significance level (0.05 or 0.10)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*run) return cmd_run(run_config, seed, jobs, budget, per_candidate, output_dir);
    if (*describe) return cmd_describe(describe_path, labels, describe_json);
    if (*enumerate) return cmd_enumerate(grammar_path, list);
    if (*stats) return cmd_stats(results_path, measure, alpha);
  } catch (const automlc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
