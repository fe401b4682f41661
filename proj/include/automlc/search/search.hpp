#pragma once

#include "automlc/search/bo.hpp"
#include "automlc/search/encode.hpp"
#include "automlc/search/evolution.hpp"
#include "automlc/search/forest.hpp"
#include "automlc/search/local.hpp"
#include "automlc/search/objective.hpp"
#include "automlc/search/trace.hpp"

namespace automlc {

inline SearchResult run_search(const Grammar& g, Objective& objective, const SearchConfig& cfg, const Budget& budget) {
  switch (cfg.method) {
    case Method::ggp: return run_ggp(g, objective, cfg, budget);
    case Method::spggp: return run_spggp(g, objective, cfg, budget);
    case Method::bo: return run_bo(g, objective, cfg, budget);
    case Method::rs: return run_rs(g, objective, cfg, budget);
    case Method::gs: return run_gs(g, objective, cfg, budget);
  }
  throw std::invalid_argument("unknown search method");
}

}  // namespace automlc
