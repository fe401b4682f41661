#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "automlc/core/text.hpp"
#include "automlc/dataset.hpp"
#include "automlc/grammar.hpp"
#include "automlc/search/search.hpp"
#include "automlc/stats.hpp"

extern char** environ;

namespace automlc {

/// Bad or missing experiment input; reported before any run starts.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace fs = std::filesystem;

struct ExperimentConfig {
  std::vector<std::string> datasets;
  std::string grammar;
  std::vector<Method> methods;
  std::vector<std::uint64_t> seeds;
  std::size_t cv_folds = 5;
  Budget budget{60.0, 10.0, FitBudget::kDefaultModelCap, std::nullopt};
  bool timeouts = true;
  std::string output_dir = "automlc_out";
  std::size_t jobs = 1;
  std::optional<CsvLabelSpec> csv_labels;
  SearchConfig search;

  /// Applies one key; relative paths resolve against base_dir.
  void set(const std::string& key, const std::string& raw, const fs::path& base_dir = {}) {
    const std::string value(text::trim(raw));
    auto path = [&](const std::string& p) { return fs::path(p).is_absolute() || base_dir.empty() ? p : (base_dir / p).lexically_normal().string(); };
    auto list = [&] {
      std::vector<std::string> out;
      for (auto& part : text::split_top_level(value, ',')) {
        auto t = std::string(text::trim(part));
        if (!t.empty()) out.push_back(t);
      }
      return out;
    };
    auto count = [&](const char* what) {
      auto v = text::parse_int(value);
      if (!v || *v < 1) throw ConfigError(std::string(what) + " needs a positive integer, got '" + value + "'");
      return static_cast<std::size_t>(*v);
    };
    auto seconds = [&](const char* what) {
      auto v = text::parse_real(value);
      if (!v || !(*v > 0)) throw ConfigError(std::string(what) + " needs a positive number of seconds, got '" + value + "'");
      return *v;
    };
    try {
      if (key == "datasets") {
        datasets.clear();
        for (auto& d : list()) datasets.push_back(path(d));
      } else if (key == "grammar") {
        grammar = path(value);
      } else if (key == "methods") {
        methods.clear();
        for (auto& m : list()) methods.push_back(parse_method(m));
      } else if (key == "seeds") {
        seeds.clear();
        for (auto& s : list()) {
          auto v = text::parse_int(s);
          if (!v || *v < 0) throw ConfigError("seeds must be non-negative integers, got '" + s + "'");
          seeds.push_back(static_cast<std::uint64_t>(*v));
        }
      } else if (key == "cv_folds") {
        cv_folds = count("cv_folds");
      } else if (key == "budget_secs") {
        budget.total_seconds = seconds("budget_secs");
      } else if (key == "per_candidate_secs") {
        budget.per_candidate_seconds = seconds("per_candidate_secs");
      } else if (key == "model_size_cap") {
        budget.model_size_cap = count("model_size_cap");
      } else if (key == "max_evaluations") {
        budget.max_evaluations = count("max_evaluations");
      } else if (key == "timeouts") {
        auto l = text::lower(value);
        if (l == "on" || l == "true" || l == "1") timeouts = true;
        else if (l == "off" || l == "false" || l == "0") timeouts = false;
        else throw ConfigError("timeouts must be on or off, got '" + value + "'");
      } else if (key == "output_dir") {
        output_dir = path(value);
      } else if (key == "jobs") {
        jobs = count("jobs");
      } else if (key == "csv_labels") {
        csv_labels = CsvLabelSpec::parse(value);
      } else if (!search.set(key, value)) {
        throw ConfigError("unknown configuration key '" + key + "'");
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(key + ": " + e.what());
    }
  }

  /// Overrides from AMLC_<KEY> environment variables (key upper-cased).
  void apply_environment() {
    for (char** env = environ; env && *env; ++env) {
      std::string_view entry(*env);
      if (entry.substr(0, 5) != "AMLC_") continue;
      auto eq = entry.find('=');
      if (eq == std::string_view::npos) continue;
      set(text::lower(entry.substr(5, eq - 5)), std::string(entry.substr(eq + 1)));
    }
  }

  static ExperimentConfig parse(std::istream& in, const fs::path& base_dir = {}) {
    ExperimentConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto hash = line.find('#');
      auto t = text::trim(std::string_view(line).substr(0, hash));
      if (t.empty()) continue;
      auto eq = t.find('=');
      if (eq == std::string_view::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
      auto key = text::lower(text::trim(t.substr(0, eq)));
      try {
        cfg.set(key, std::string(t.substr(eq + 1)), base_dir);
      } catch (const ConfigError& e) {
        throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
      }
    }
    return cfg;
  }

  static ExperimentConfig load(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open configuration '" + file + "'");
    auto cfg = parse(in, fs::path(file).parent_path());
    cfg.apply_environment();
    return cfg;
  }

  /// Search budget actually handed to each cell. With timeouts off no clock
  /// is consulted and runs stop at max_evaluations.
  Budget effective_budget() const {
    Budget b = budget;
    if (!timeouts) {
      b.total_seconds = std::numeric_limits<double>::infinity();
      b.per_candidate_seconds = std::numeric_limits<double>::infinity();
    }
    return b;
  }

  void validate() const {
    if (datasets.empty()) throw ConfigError("no datasets given");
    if (methods.empty()) throw ConfigError("no methods given");
    if (seeds.empty()) throw ConfigError("no seeds given");
    if (grammar.empty()) throw ConfigError("no grammar given");
    if (cv_folds < 2) throw ConfigError("cv_folds must be at least 2");
    if (!timeouts && !budget.max_evaluations) throw ConfigError("timeouts = off needs max_evaluations to bound each run");
    for (auto& d : datasets)
      if (!fs::exists(d)) throw ConfigError("dataset not found: " + d);
    if (!fs::exists(grammar)) throw ConfigError("grammar not found: " + grammar);
    std::set<Method> seen;
    for (auto m : methods)
      if (!seen.insert(m).second) throw ConfigError(std::string("method listed twice: ") + method_name(m));
    try {
      search.validate();
      budget.validate();
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }
};

struct ResultRow {
  std::string dataset;
  std::size_t fold = 0;
  std::string method;
  std::uint64_t seed = 0;
  MetricsReport report;
  std::string config;
  double seconds = 0;
  std::string error;

  static std::vector<std::string> csv_header() {
    return {"dataset", "fold", "method", "seed", "em", "hl", "fm", "rl", "fitness", "config", "seconds"};
  }
};

inline std::vector<std::string> result_fields(const ResultRow& r, bool zero_timing) {
  return {r.dataset,
          std::to_string(r.fold),
          r.method,
          std::to_string(r.seed),
          text::format_real(r.report.em),
          text::format_real(r.report.hl),
          text::format_real(r.report.fm),
          text::format_real(r.report.rl),
          text::format_real(r.report.fitness),
          r.config,
          zero_timing ? "0" : text::format_real(r.seconds)};
}

inline void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows, bool zero_timing) {
  text::write_csv_row(os, ResultRow::csv_header());
  for (auto& r : rows) text::write_csv_row(os, result_fields(r, zero_timing));
}

inline std::vector<ResultRow> read_results_csv(std::istream& in) {
  std::vector<std::string> f;
  if (!text::read_csv_row(in, f) || f != ResultRow::csv_header()) throw ParseError("results CSV: unexpected header");
  std::vector<ResultRow> rows;
  std::size_t line = 1;
  while (text::read_csv_row(in, f)) {
    ++line;
    if (f.size() == 1 && f[0].empty()) continue;
    if (f.size() != ResultRow::csv_header().size()) throw ParseError("results CSV: wrong field count", line);
    ResultRow r;
    r.dataset = f[0];
    auto fold = text::parse_int(f[1]);
    auto seed = text::parse_int(f[3]);
    auto em = text::parse_real(f[4]), hl = text::parse_real(f[5]), fm = text::parse_real(f[6]), rl = text::parse_real(f[7]),
         fit = text::parse_real(f[8]), sec = text::parse_real(f[10]);
    if (!fold || !seed || !em || !hl || !fm || !rl || !fit || !sec) throw ParseError("results CSV: malformed number", line);
    r.fold = static_cast<std::size_t>(*fold);
    r.method = f[2];
    r.seed = static_cast<std::uint64_t>(*seed);
    r.report.em = *em;
    r.report.hl = *hl;
    r.report.fm = *fm;
    r.report.rl = *rl;
    r.report.fitness = *fit;
    r.config = f[9];
    r.seconds = *sec;
    rows.push_back(std::move(r));
  }
  return rows;
}

inline const std::vector<std::string>& measure_names() {
  static const std::vector<std::string> names{"fitness", "em", "hl", "fm", "rl"};
  return names;
}

inline double measure_of(const MetricsReport& r, const std::string& m) {
  if (m == "em") return r.em;
  if (m == "hl") return r.hl;
  if (m == "fm") return r.fm;
  if (m == "rl") return r.rl;
  if (m == "fitness") return r.fitness;
  throw std::invalid_argument("unknown measure '" + m + "' (em, hl, fm, rl, fitness)");
}

inline Direction measure_direction(const std::string& m) {
  return m == "hl" || m == "rl" ? Direction::minimize : Direction::maximize;
}

/// Datasets by methods, each cell the mean over folds and seeds. Rows and
/// columns follow first appearance unless an order is given.
inline ResultMatrix result_matrix(const std::vector<ResultRow>& rows, const std::string& measure,
                                  std::vector<std::string> methods = {}) {
  std::vector<std::string> datasets;
  for (auto& r : rows) {
    if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end()) datasets.push_back(r.dataset);
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
  }
  RealMatrix sum(datasets.size(), methods.size()), cnt(datasets.size(), methods.size());
  for (auto& r : rows) {
    auto i = static_cast<std::size_t>(std::find(datasets.begin(), datasets.end(), r.dataset) - datasets.begin());
    auto j = static_cast<std::size_t>(std::find(methods.begin(), methods.end(), r.method) - methods.begin());
    sum(i, j) += measure_of(r.report, measure);
    cnt(i, j) += 1;
  }
  for (std::size_t i = 0; i < datasets.size(); ++i)
    for (std::size_t j = 0; j < methods.size(); ++j) {
      if (cnt(i, j) == 0) throw std::invalid_argument("no result for " + datasets[i] + " / " + methods[j]);
      sum(i, j) /= cnt(i, j);
    }
  return ResultMatrix{std::move(sum), measure_direction(measure), std::move(methods), std::move(datasets)};
}

inline void write_matrix_csv(std::ostream& os, const ResultMatrix& rm) {
  std::vector<std::string> header{"dataset"};
  header.insert(header.end(), rm.methods.begin(), rm.methods.end());
  text::write_csv_row(os, header);
  for (std::size_t i = 0; i < rm.n(); ++i) {
    std::vector<std::string> row{rm.datasets[i]};
    for (std::size_t j = 0; j < rm.k(); ++j) row.push_back(text::format_real(rm.values(i, j)));
    text::write_csv_row(os, row);
  }
}

/// How often each algorithm was selected per method, at the multi-label and
/// single-label levels, split by whether a meta-algorithm wrapped it.
struct SelectionCount {
  std::string method, level, algorithm, context;
  std::size_t count = 0;
  double relative = 0;
};

inline std::vector<SelectionCount> selection_frequency(const std::vector<ResultRow>& rows) {
  std::map<std::tuple<std::string, std::string, std::string, std::string>, std::size_t> counts;
  std::map<std::pair<std::string, std::string>, std::size_t> totals;
  std::vector<std::string> order;
  for (auto& r : rows) {
    if (r.config.empty()) continue;
    PipelineConfig cfg;
    try {
      cfg = PipelineConfig::parse(r.config);
    } catch (const std::exception&) {
      continue;
    }
    if (std::find(order.begin(), order.end(), r.method) == order.end()) order.push_back(r.method);
    ++counts[{r.method, "mlc", cfg.mlc.algorithm, cfg.meta ? "under " + cfg.meta->algorithm : "standalone"}];
    ++totals[{r.method, "mlc"}];
    if (cfg.mlc.base) {
      const auto& b = *cfg.mlc.base;
      const bool wrapped = b.inner != nullptr;
      ++counts[{r.method, "slc", wrapped ? b.inner->algorithm : b.algorithm, wrapped ? "under " + b.algorithm : "standalone"}];
      ++totals[{r.method, "slc"}];
    }
  }
  std::vector<SelectionCount> out;
  for (auto& m : order)
    for (auto& [key, c] : counts) {
      auto& [method, level, alg, ctx] = key;
      if (method != m) continue;
      out.push_back({method, level, alg, ctx, c, static_cast<double>(c) / static_cast<double>(totals[{method, level}])});
    }
  return out;
}

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::map<std::string, StatsReport> stats;
  std::vector<std::string> files;
};

namespace detail {

inline void write_atomically(const fs::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

inline std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

}  // namespace detail

/// Runs every (dataset, fold, method, seed) cell: search on the training
/// folds, refit the returned configuration on them and score it on the
/// held-out fold. Writes results.csv, matrix_<measure>.csv, stats_report.txt,
/// stats_report.json, selection_frequency.csv and per-cell traces.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr) {
  cfg.validate();
  Grammar grammar;
  {
    std::ifstream in(cfg.grammar);
    try {
      grammar = parse_grammar(in);
    } catch (const std::exception& e) {
      throw ConfigError("grammar " + cfg.grammar + ": " + e.what());
    }
  }
  std::vector<MLDataset> data;
  std::vector<std::string> names;
  for (auto& path : cfg.datasets) {
    try {
      data.push_back(load_dataset(path, cfg.csv_labels));
    } catch (const std::exception& e) {
      throw ConfigError("dataset " + path + ": " + e.what());
    }
    auto stem = detail::stem_of(path);
    if (std::find(names.begin(), names.end(), stem) != names.end()) throw ConfigError("two datasets named '" + stem + "'");
    if (data.back().n() < cfg.cv_folds) throw ConfigError("dataset " + stem + " has fewer examples than folds");
    names.push_back(stem);
  }

  const fs::path out_dir(cfg.output_dir);
  fs::create_directories(out_dir / "traces");
  const bool zero_timing = !cfg.timeouts;
  const Budget budget = cfg.effective_budget();

  struct Cell {
    std::size_t dataset, fold, method, seed;
  };
  std::vector<Cell> cells;
  for (std::size_t d = 0; d < data.size(); ++d)
    for (std::size_t f = 0; f < cfg.cv_folds; ++f)
      for (std::size_t m = 0; m < cfg.methods.size(); ++m)
        for (std::size_t s = 0; s < cfg.seeds.size(); ++s) cells.push_back({d, f, m, s});

  // Fold assignments per (dataset, seed), shared by all methods.
  std::map<std::pair<std::size_t, std::size_t>, FoldAssignment> folds;
  for (std::size_t d = 0; d < data.size(); ++d)
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s)
      folds[{d, s}] = iterative_stratified_kfold(data[d], cfg.cv_folds, derive_seed(cfg.seeds[s], hash_string(names[d])));

  std::vector<ResultRow> rows(cells.size());
  std::mutex log_mutex;
  auto run_cell = [&](std::size_t c) {
    const auto& cell = cells[c];
    ResultRow& row = rows[c];
    row.dataset = names[cell.dataset];
    row.fold = cell.fold;
    row.method = method_name(cfg.methods[cell.method]);
    row.seed = cfg.seeds[cell.seed];
    const auto t0 = Clock::now();
    const auto& fa = folds.at({cell.dataset, cell.seed});
    const auto cell_seed = derive_seed(derive_seed(row.seed, hash_string(row.dataset)), cell.fold);
    try {
      auto train = data[cell.dataset].subset(fa.complement(cell.fold));
      auto test = data[cell.dataset].subset(fa.members(cell.fold));
      SearchConfig sc = cfg.search;
      sc.method = cfg.methods[cell.method];
      sc.seed = cell_seed;
      DatasetObjective objective(train, cell_seed, sc.validation_fraction, budget.model_size_cap);
      auto result = run_search(grammar, objective, sc, budget);
      row.config = result.best_expression;
      auto ev = evaluate_candidate(result.best, train, test, Deadline{}, budget.model_size_cap, cell_seed);
      row.report = ev.report;
      if (!ev.reason.empty()) row.error = "final fit: " + ev.reason;

      const auto base = row.dataset + "__fold" + std::to_string(cell.fold) + "__" + row.method + "__seed" + std::to_string(row.seed);
      std::ostringstream csv;
      result.trace.write_csv(csv, zero_timing);
      detail::write_atomically(out_dir / "traces" / (base + ".csv"), csv.str());
      detail::write_atomically(out_dir / "traces" / (base + ".json"), result.trace.to_json(zero_timing).dump(1) + "\n");
    } catch (const std::exception& e) {
      row.report = zero_report();
      row.error = e.what();
    }
    row.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    if (log) {
      std::lock_guard lock(log_mutex);
      *log << row.dataset << " fold " << row.fold << " " << row.method << " seed " << row.seed << ": fitness "
           << text::format_real(row.report.fitness) << (row.error.empty() ? "" : " [" + row.error + "]") << "\n";
    }
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(cfg.jobs, cells.size()));
  if (jobs == 1) {
    for (std::size_t c = 0; c < cells.size(); ++c) run_cell(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w)
      workers.emplace_back([&] {
        for (std::size_t c; (c = next.fetch_add(1)) < cells.size();) run_cell(c);
      });
    for (auto& t : workers) t.join();
  }

  ExperimentResult out;
  out.rows = rows;
  std::vector<std::string> method_order;
  for (auto m : cfg.methods) method_order.push_back(method_name(m));

  std::ostringstream results;
  write_results_csv(results, rows, zero_timing);
  detail::write_atomically(out_dir / "results.csv", results.str());
  out.files.push_back((out_dir / "results.csv").string());

  std::ostringstream errors;
  text::write_csv_row(errors, {"dataset", "fold", "method", "seed", "error"});
  for (auto& r : rows)
    if (!r.error.empty()) text::write_csv_row(errors, {r.dataset, std::to_string(r.fold), r.method, std::to_string(r.seed), r.error});
  detail::write_atomically(out_dir / "cell_errors.csv", errors.str());

  std::string report_text;
  nlohmann::json report_json = nlohmann::json::object();
  for (auto& m : measure_names()) {
    auto rm = result_matrix(rows, m, method_order);
    std::ostringstream mcsv;
    write_matrix_csv(mcsv, rm);
    detail::write_atomically(out_dir / ("matrix_" + m + ".csv"), mcsv.str());
    out.files.push_back((out_dir / ("matrix_" + m + ".csv")).string());
    auto rep = analyse(rm, m, 0.05);
    report_text += rep.to_text() + "\n";
    report_json[m] = rep.to_json();
    out.stats.emplace(m, std::move(rep));
  }
  detail::write_atomically(out_dir / "stats_report.txt", report_text);
  detail::write_atomically(out_dir / "stats_report.json", report_json.dump(1) + "\n");

  std::ostringstream freq;
  text::write_csv_row(freq, {"method", "level", "algorithm", "context", "count", "relative_frequency"});
  for (auto& s : selection_frequency(rows))
    text::write_csv_row(freq, {s.method, s.level, s.algorithm, s.context, std::to_string(s.count), text::format_real(s.relative)});
  detail::write_atomically(out_dir / "selection_frequency.csv", freq.str());
  out.files.push_back((out_dir / "stats_report.txt").string());
  out.files.push_back((out_dir / "stats_report.json").string());
  out.files.push_back((out_dir / "selection_frequency.csv").string());
  return out;
}

/// Table-style summary of a dataset: n, m, q, cardinality, density, diversity.
inline nlohmann::json describe_dataset(const MLDataset& ds) {
  auto s = label_stats(ds);
  return {{"name", ds.name},
          {"n", ds.n()},
          {"m", ds.m()},
          {"q", ds.q()},
          {"cardinality", s.cardinality},
          {"density", s.density},
          {"diversity", s.diversity},
          {"distinct_labelsets", s.distinct_labelsets}};
}

}  // namespace automlc
