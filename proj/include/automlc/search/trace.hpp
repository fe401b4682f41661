#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "automlc/core/random.hpp"
#include "automlc/core/text.hpp"
#include "automlc/grammar.hpp"
#include "automlc/operators.hpp"
#include "automlc/search/objective.hpp"

namespace automlc {

enum class Method { ggp, spggp, bo, rs, gs };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::ggp: return "GGP";
    case Method::spggp: return "spGGP";
    case Method::bo: return "BO";
    case Method::rs: return "RS";
    case Method::gs: return "GS";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  auto l = text::lower(text::trim(s));
  if (l == "ggp") return Method::ggp;
  if (l == "spggp") return Method::spggp;
  if (l == "bo") return Method::bo;
  if (l == "rs") return Method::rs;
  if (l == "gs") return Method::gs;
  throw std::invalid_argument("unknown search method '" + std::string(s) + "'");
}

struct SearchConfig {
  Method method = Method::ggp;
  std::size_t population = 80;
  std::size_t species_count = 8;
  std::size_t per_species = 10;
  std::size_t tournament = 2;
  std::size_t elitism = 1;
  double p_crossover = 0.8;
  double p_mutation = 0.2;
  double intra_crossover = 0.5;
  double inter_crossover = 0.5;
  std::size_t resample_every = 5;
  std::size_t restart_stall = 5;
  std::size_t restart_min_gens = 20;
  std::size_t p = 80;
  std::size_t trees = 10;
  std::size_t candidates_per_round = 1000;
  std::size_t interleave_random_every = 2;
  std::size_t top_incumbents = 10;
  std::size_t mutations_per_incumbent = 10;
  double xi = 0.01;
  double validation_fraction = 0.3;
  std::uint64_t seed = 0;

  void validate() const {
    for (double v : {p_crossover, p_mutation, intra_crossover, inter_crossover})
      if (!(v >= 0 && v <= 1)) throw std::invalid_argument("search probabilities must lie in [0,1]");
    if (p_crossover + p_mutation > 1 + 1e-12) throw std::invalid_argument("p_crossover + p_mutation exceeds 1");
    if (std::abs(intra_crossover + inter_crossover - 1) > 1e-9) throw std::invalid_argument("intra_crossover + inter_crossover must be 1");
    for (std::size_t v : {population, species_count, per_species, tournament, resample_every, restart_stall, p, trees,
                          candidates_per_round, interleave_random_every})
      if (v < 1) throw std::invalid_argument("search counts must be at least 1");
    if (species_count > 8) throw std::invalid_argument("species_count must lie in 1..8");
    if (elitism >= population) throw std::invalid_argument("elitism must be smaller than the population");
    if (!(validation_fraction > 0 && validation_fraction < 1)) throw std::invalid_argument("validation_fraction must lie in (0,1)");
    if (!(xi >= 0)) throw std::invalid_argument("xi must be non-negative");
  }

  /// Applies one `key=value` override; returns false for unknown keys.
  bool set(std::string_view key, std::string_view value) {
    auto count = [&](std::size_t& dst) {
      auto v = text::parse_int(value);
      if (!v || *v < 0) throw std::invalid_argument("'" + std::string(key) + "' needs a non-negative integer");
      dst = static_cast<std::size_t>(*v);
    };
    auto real = [&](double& dst) {
      auto v = text::parse_real(value);
      if (!v) throw std::invalid_argument("'" + std::string(key) + "' needs a number");
      dst = *v;
    };
    static const std::map<std::string, std::size_t SearchConfig::*, std::less<>> counts = {
        {"population", &SearchConfig::population},
        {"species_count", &SearchConfig::species_count},
        {"per_species", &SearchConfig::per_species},
        {"tournament", &SearchConfig::tournament},
        {"elitism", &SearchConfig::elitism},
        {"resample_every", &SearchConfig::resample_every},
        {"restart_stall", &SearchConfig::restart_stall},
        {"restart_min_gens", &SearchConfig::restart_min_gens},
        {"p", &SearchConfig::p},
        {"trees", &SearchConfig::trees},
        {"candidates_per_round", &SearchConfig::candidates_per_round},
        {"interleave_random_every", &SearchConfig::interleave_random_every},
        {"top_incumbents", &SearchConfig::top_incumbents},
        {"mutations_per_incumbent", &SearchConfig::mutations_per_incumbent},
    };
    static const std::map<std::string, double SearchConfig::*, std::less<>> reals = {
        {"p_crossover", &SearchConfig::p_crossover},
        {"p_mutation", &SearchConfig::p_mutation},
        {"xi", &SearchConfig::xi},
        {"validation_fraction", &SearchConfig::validation_fraction},
    };
    if (auto it = counts.find(key); it != counts.end()) {
      count(this->*(it->second));
      return true;
    }
    if (auto it = reals.find(key); it != reals.end()) {
      real(this->*(it->second));
      return true;
    }
    if (key == "intra_crossover") {
      real(intra_crossover);
      inter_crossover = 1 - intra_crossover;
      return true;
    }
    if (key == "inter_crossover") {
      real(inter_crossover);
      intra_crossover = 1 - inter_crossover;
      return true;
    }
    return false;
  }
};

struct CandidateRecord {
  std::size_t iteration = 0;  // generation, batch or BO iteration
  std::optional<int> species;
  std::string expression;
  MetricsReport report;
  double seconds = 0;
  bool violation = false;
  std::string reason;
  std::optional<std::size_t> parent;  // record the candidate was derived from (GS)
  std::size_t epoch = 0;
  bool cached = false;
};

struct IncumbentUpdate {
  std::size_t record = 0;
  std::size_t iteration = 0;
  double fitness = 0;
  std::string expression;
};

struct RestartEvent {
  std::size_t generation = 0;
  std::size_t population = 0;
  std::optional<int> species;
};

struct SearchTrace {
  std::vector<CandidateRecord> records;
  std::vector<IncumbentUpdate> incumbents;
  std::vector<RestartEvent> restarts;

  static std::vector<std::string> csv_header() {
    return {"iteration", "species", "expression", "em", "hl", "fm", "rl", "fitness", "seconds", "violation"};
  }

  /// One row per candidate. With zero_timing the seconds column is written as 0
  /// so that repeated deterministic runs produce identical bytes.
  void write_csv(std::ostream& os, bool zero_timing = false) const {
    text::write_csv_row(os, csv_header());
    for (const auto& r : records) {
      text::write_csv_row(os, {std::to_string(r.iteration), r.species ? std::to_string(*r.species) : "", r.expression,
                               text::format_real(r.report.em), text::format_real(r.report.hl), text::format_real(r.report.fm),
                               text::format_real(r.report.rl), text::format_real(r.report.fitness),
                               zero_timing ? "0" : text::format_real(r.seconds), r.violation ? "1" : "0"});
    }
  }

  nlohmann::json to_json(bool zero_timing = false) const {
    nlohmann::json j;
    j["records"] = nlohmann::json::array();
    for (const auto& r : records) {
      nlohmann::json e{{"iteration", r.iteration},
                       {"expression", r.expression},
                       {"em", r.report.em},
                       {"hl", r.report.hl},
                       {"fm", r.report.fm},
                       {"rl", r.report.rl},
                       {"fitness", r.report.fitness},
                       {"seconds", zero_timing ? 0.0 : r.seconds},
                       {"violation", r.violation},
                       {"reason", r.reason},
                       {"epoch", r.epoch},
                       {"cached", r.cached}};
      e["species"] = r.species ? nlohmann::json(*r.species) : nlohmann::json(nullptr);
      e["parent"] = r.parent ? nlohmann::json(*r.parent) : nlohmann::json(nullptr);
      j["records"].push_back(std::move(e));
    }
    j["incumbents"] = nlohmann::json::array();
    for (const auto& u : incumbents)
      j["incumbents"].push_back({{"record", u.record}, {"iteration", u.iteration}, {"fitness", u.fitness}, {"expression", u.expression}});
    j["restarts"] = nlohmann::json::array();
    for (const auto& r : restarts) {
      nlohmann::json e{{"generation", r.generation}, {"population", r.population}};
      e["species"] = r.species ? nlohmann::json(*r.species) : nlohmann::json(nullptr);
      j["restarts"].push_back(std::move(e));
    }
    return j;
  }
};

struct SearchResult {
  PipelineConfig best;
  std::string best_expression;
  double best_fitness = 0;
  DerivationTree best_tree;
  SearchTrace trace;
};

/// Shared bookkeeping for all methods: the evaluation budget, the trace,
/// the incumbent and a cache keyed by (expression, epoch).
class SearchContext {
 public:
  SearchContext(const Grammar& grammar, Objective& objective, const SearchConfig& cfg, const Budget& budget)
      : grammar_(grammar), objective_(objective), cfg_(cfg), budget_(budget), start_(Clock::now()) {
    cfg_.validate();
    budget_.validate();
  }

  const Grammar& grammar() const { return grammar_; }
  const SearchConfig& config() const { return cfg_; }
  const SearchTrace& trace() const { return trace_; }
  std::size_t evaluations() const { return trace_.records.size(); }
  double elapsed() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }

  /// True once the wall clock or the evaluation cap is spent. The first
  /// evaluation is always allowed. The cap counts fitted candidates; cache
  /// hits are free but bounded at kCacheHitFactor times the cap so that a
  /// converged search on a small grammar still terminates.
  bool exhausted() const {
    if (trace_.records.empty()) return false;
    if (budget_.max_evaluations) {
      if (fresh_ >= *budget_.max_evaluations) return true;
      if (trace_.records.size() >= kCacheHitFactor * *budget_.max_evaluations) return true;
    }
    return elapsed() >= budget_.total_seconds;
  }

  std::size_t fresh_evaluations() const { return fresh_; }
  bool last_was_cached() const { return last_cached_; }

  /// Evaluates the individual's tree (read against `g`, which may be a
  /// species grammar), stores fitness and the record index.
  double evaluate(Individual& ind, const Grammar& g, std::size_t iteration, std::size_t epoch,
                  std::optional<std::size_t> parent = std::nullopt) {
    auto cfg = map_to_config(ind.tree, g);
    auto expr = cfg.to_string();
    CandidateRecord rec;
    rec.iteration = iteration;
    rec.species = ind.species;
    rec.expression = expr;
    rec.parent = parent;
    rec.epoch = epoch;
    auto key = std::make_pair(expr, epoch);
    if (auto it = cache_.find(key); it != cache_.end()) {
      rec.report = it->second.report;
      rec.violation = it->second.violation;
      rec.reason = it->second.reason;
      rec.cached = true;
    } else {
      // A candidate never runs past the end of the whole search.
      const double limit = std::min(budget_.per_candidate_seconds, std::max(0.0, budget_.total_seconds - elapsed()));
      auto ev = objective_.evaluate(cfg, derive_seed(cfg_.seed, hash_string(expr)), epoch, Deadline::after(limit));
      rec.report = ev.report;
      rec.violation = ev.violation;
      rec.reason = ev.reason;
      rec.seconds = ev.seconds;
      ++fresh_;
      if (!ev.violation) cache_.emplace(std::move(key), ev);
    }
    seen_.insert(expr);
    last_cached_ = rec.cached;
    const double f = rec.report.fitness;
    const auto index = trace_.records.size();
    trace_.records.push_back(std::move(rec));
    ind.fitness = f;
    ind.record = index;
    if (!best_ || f > best_fitness_) {
      best_fitness_ = f;
      best_ = ind.tree;
      best_config_ = std::move(cfg);
      best_expression_ = expr;
      trace_.incumbents.push_back({index, iteration, f, expr});
    }
    return f;
  }

  void note_restart(std::size_t generation, std::size_t population, std::optional<int> species) {
    trace_.restarts.push_back({generation, population, species});
  }

  bool has_incumbent() const { return best_.has_value(); }
  double incumbent_fitness() const { return best_fitness_; }
  const std::string& incumbent_expression() const { return best_expression_; }

  bool seen(const std::string& expression) const { return seen_.count(expression) > 0; }

  SearchResult finish() {
    if (!best_) throw std::logic_error("search finished without evaluating any candidate");
    SearchResult r;
    r.best = best_config_;
    r.best_expression = best_expression_;
    r.best_fitness = best_fitness_;
    r.best_tree = *best_;
    r.trace = std::move(trace_);
    return r;
  }

 private:
  const Grammar& grammar_;
  Objective& objective_;
  SearchConfig cfg_;
  Budget budget_;
  Clock::time_point start_;
  SearchTrace trace_;
  std::optional<DerivationTree> best_;
  PipelineConfig best_config_;
  double best_fitness_ = 0;
  std::string best_expression_;
  std::map<std::pair<std::string, std::size_t>, Evaluation> cache_;
  std::set<std::string> seen_;
  std::size_t fresh_ = 0;
  bool last_cached_ = false;
  static constexpr std::size_t kCacheHitFactor = 5;
};

}  // namespace automlc
