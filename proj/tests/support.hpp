#pragma once

#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "automlc/core/matrix.hpp"
#include "automlc/dataset.hpp"
#include "automlc/grammar.hpp"
#include "automlc/pipeline.hpp"

namespace testing_support {

inline std::string source_path(const std::string& rel) { return std::string(AUTOMLC_SOURCE_DIR) + "/" + rel; }

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline automlc::Grammar load_grammar(const std::string& name) {
  std::ifstream in(source_path("grammars/" + name + ".grammar"));
  return automlc::parse_grammar(in);
}

inline automlc::BinaryMatrix random_binary(std::size_t n, std::size_t q, std::mt19937_64& rng, double p = 0.5) {
  automlc::BinaryMatrix m(n, q);
  std::bernoulli_distribution d(p);
  for (auto& v : m.data()) v = d(rng) ? 1 : 0;
  return m;
}

inline automlc::RealMatrix random_real(std::size_t n, std::size_t m, std::mt19937_64& rng) {
  automlc::RealMatrix x(n, m);
  std::normal_distribution<double> d;
  for (auto& v : x.data()) v = d(rng);
  return x;
}

/// Two well separated Gaussian blobs per label, so every learner can fit it.
inline automlc::MLDataset separable_dataset(std::size_t n, std::size_t q, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto y = random_binary(n, q, rng);
  automlc::RealMatrix x(n, q);
  std::normal_distribution<double> noise(0, 0.1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < q; ++j) x(i, j) = (y(i, j) ? 1.0 : -1.0) + noise(rng);
  return automlc::make_dataset("separable", x, y);
}

/// Deterministic surface over tiny_ref with a single peak at
/// CC(threshold=0.7, base=knn(k=3)); every coordinate moves towards it.
inline double unimodal_surface(const automlc::PipelineConfig& c) {
  double f = c.mlc.algorithm == "CC" ? 0.3 : c.mlc.algorithm == "BR" ? 0.2 : 0.1;
  auto int_param = [](const std::map<std::string, std::string>& p, const char* key, int fallback) {
    auto it = p.find(key);
    return it == p.end() ? fallback : std::stoi(it->second);
  };
  if (c.mlc.base) {
    const auto& b = *c.mlc.base;
    if (b.algorithm == "knn") f += 0.1 + 0.2 * (1 - std::abs(int_param(b.params, "k", 5) - 3) / 4.0);
    else if (b.algorithm == "decision-tree") f += 0.15;
    else f += 0.05;
  }
  f += 0.2 * (1 - std::abs(c.effective_threshold() - 0.7) / 0.4);
  return f;
}

/// Rugged variant: the unimodal trend plus a hash-driven offset per configuration.
inline double rugged_surface(const automlc::PipelineConfig& c) {
  const auto h = automlc::hash_string(c.to_string());
  return 0.6 * unimodal_surface(c) + 0.4 * static_cast<double>(h % 10007) / 10007.0;
}

}  // namespace testing_support
