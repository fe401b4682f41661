#pragma once

// Test-side reference implementations, written without sharing code with the library.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "automlc/core/matrix.hpp"
#include "automlc/dataset.hpp"
#include "automlc/grammar.hpp"

namespace oracle {

using namespace automlc;

inline double em(const BinaryMatrix& p, const BinaryMatrix& t) {
  double hits = 0;
  for (std::size_t i = 0; i < p.rows(); ++i) {
    bool same = true;
    for (std::size_t j = 0; j < p.cols(); ++j) same = same && p(i, j) == t(i, j);
    hits += same;
  }
  return hits / static_cast<double>(p.rows());
}

inline double hl(const BinaryMatrix& p, const BinaryMatrix& t) {
  double d = 0;
  for (std::size_t i = 0; i < p.rows(); ++i)
    for (std::size_t j = 0; j < p.cols(); ++j) d += p(i, j) != t(i, j);
  return d / static_cast<double>(p.rows() * p.cols());
}

inline double fm(const BinaryMatrix& p, const BinaryMatrix& t) {
  double total = 0;
  for (std::size_t j = 0; j < p.cols(); ++j) {
    double tp = 0, pp = 0, tt = 0;
    for (std::size_t i = 0; i < p.rows(); ++i) {
      tp += p(i, j) && t(i, j);
      pp += p(i, j);
      tt += t(i, j);
    }
    total += pp + tt == 0 ? 0.0 : 2 * tp / (pp + tt);
  }
  return total / static_cast<double>(p.cols());
}

inline double rl(const RealMatrix& s, const BinaryMatrix& t, std::size_t& skipped) {
  double sum = 0;
  std::size_t used = 0;
  skipped = 0;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    double pairs = 0, bad = 0;
    for (std::size_t r = 0; r < t.cols(); ++r)
      for (std::size_t k = 0; k < t.cols(); ++k) {
        if (!t(i, r) || t(i, k)) continue;
        pairs += 1;
        if (s(i, k) > s(i, r)) bad += 1;
        if (s(i, k) == s(i, r)) bad += 0.5;
      }
    if (pairs == 0) {
      ++skipped;
      continue;
    }
    sum += bad / pairs;
    ++used;
  }
  return used ? sum / static_cast<double>(used) : 0.0;
}


// Independent enumerator: the set of bracketed algorithm sequences a
// nonterminal can derive, built straight from the productions.
using Seqs = std::set<std::vector<std::string>>;

inline Seqs algorithm_sequences(const Grammar& g, int nt, std::map<int, Seqs>& memo) {
  if (auto it = memo.find(nt); it != memo.end()) return it->second;
  Seqs out;
  for (const auto& alt : g.at(nt).alternatives) {
    Seqs partial{std::vector<std::string>{}};
    for (const auto& s : alt) {
      Seqs options;
      if (s.opens_node()) {
        options.insert({s.text});
      } else if (s.type == Symbol::Type::nonterminal) {
        for (auto inner : algorithm_sequences(g, s.index, memo)) {
          if (inner.empty()) {
            options.insert(std::vector<std::string>{});
            continue;
          }
          inner.insert(inner.begin(), "(");
          inner.push_back(")");
          options.insert(inner);
        }
      } else {
        options.insert(std::vector<std::string>{});
      }
      Seqs next;
      for (const auto& p : partial)
        for (const auto& o : options) {
          auto v = p;
          v.insert(v.end(), o.begin(), o.end());
          next.insert(v);
        }
      partial = std::move(next);
    }
    out.insert(partial.begin(), partial.end());
  }
  memo[nt] = out;
  return out;
}

inline std::size_t count_combinations(const Grammar& g) {
  std::map<int, Seqs> memo;
  return algorithm_sequences(g, 0, memo).size();
}

/// Every hyperparameter the species may not evolve sits at its default when
/// the tree is read against the base grammar.
inline bool frozen_at_defaults(const TreeNode& n, const Grammar& base, int species) {
  const auto& alt = base.at(n.symbol).alternatives.at(static_cast<std::size_t>(n.alt));
  for (std::size_t i = 0; i < alt.size(); ++i) {
    const auto& s = alt[i];
    if (s.type == Symbol::Type::nonterminal) {
      if (!frozen_at_defaults(n.children[i], base, species)) return false;
    } else if (s.type == Symbol::Type::hyperparameter && !species_allows(species, s.hp.kind)) {
      if (n.children[i].value != s.hp.default_value) return false;
    }
  }
  return true;
}


// Largest minus smallest positive count of any label over the folds.
inline std::size_t worst_imbalance(const MLDataset& ds, const FoldAssignment& fa) {
  std::size_t worst = 0;
  for (std::size_t j = 0; j < ds.q(); ++j) {
    std::vector<std::size_t> pos(fa.folds, 0);
    for (std::size_t i = 0; i < ds.n(); ++i) pos[fa.fold_of[i]] += ds.labels(i, j);
    auto [lo, hi] = std::minmax_element(pos.begin(), pos.end());
    worst = std::max(worst, *hi - *lo);
  }
  return worst;
}

}  // namespace oracle
