#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "automlc/core/errors.hpp"
#include "automlc/core/matrix.hpp"
#include "automlc/core/random.hpp"
#include "automlc/core/text.hpp"

namespace automlc {

/// Multi-label dataset: n examples, m features, q binary labels.
/// Categorical features are stored as integer codes into `nominal_values`.
struct MLDataset {
  std::string name;
  RealMatrix features;
  BinaryMatrix labels;
  std::vector<std::string> feature_names;
  std::vector<std::string> label_names;
  std::vector<bool> categorical;
  std::vector<std::vector<std::string>> nominal_values;  // empty for numeric columns

  std::size_t n() const noexcept { return features.rows(); }
  std::size_t m() const noexcept { return features.cols(); }
  std::size_t q() const noexcept { return labels.cols(); }

  void validate() const {
    if (n() < 1 || m() < 1 || q() < 1) throw std::invalid_argument("dataset needs n, m, q >= 1");
    if (labels.rows() != n()) throw std::invalid_argument("feature and label row counts differ");
    for (auto v : labels.data())
      if (v > 1) throw std::invalid_argument("label entries must be 0 or 1");
    if (categorical.size() != m() || nominal_values.size() != m() || feature_names.size() != m())
      throw std::invalid_argument("feature metadata width mismatch");
    if (label_names.size() != q()) throw std::invalid_argument("label metadata width mismatch");
  }

  MLDataset subset(std::span<const std::size_t> rows) const {
    MLDataset out = *this;
    out.features = features.select_rows(rows);
    out.labels = labels.select_rows(rows);
    return out;
  }

  friend bool operator==(const MLDataset&, const MLDataset&) = default;
};

/// Builds a dataset with generated column names and no categorical features.
inline MLDataset make_dataset(std::string name, RealMatrix features, BinaryMatrix labels) {
  MLDataset ds;
  ds.name = std::move(name);
  ds.features = std::move(features);
  ds.labels = std::move(labels);
  for (std::size_t j = 0; j < ds.features.cols(); ++j) ds.feature_names.push_back("f" + std::to_string(j));
  for (std::size_t j = 0; j < ds.labels.cols(); ++j) ds.label_names.push_back("y" + std::to_string(j));
  ds.categorical.assign(ds.features.cols(), false);
  ds.nominal_values.assign(ds.features.cols(), {});
  ds.validate();
  return ds;
}

struct LabelStats {
  double cardinality = 0;
  double density = 0;
  double diversity = 0;
  std::size_t distinct_labelsets = 0;
};

/// Cardinality, density and diversity. Diversity divides by min(2^q, n).
inline LabelStats label_stats(const MLDataset& ds) {
  LabelStats s;
  const auto n = ds.n();
  const auto q = ds.q();
  std::size_t total = 0;
  std::set<std::vector<std::uint8_t>> sets;
  for (std::size_t i = 0; i < n; ++i) {
    auto r = ds.labels.row(i);
    total += static_cast<std::size_t>(std::count(r.begin(), r.end(), std::uint8_t{1}));
    sets.emplace(r.begin(), r.end());
  }
  s.cardinality = static_cast<double>(total) / static_cast<double>(n);
  s.density = s.cardinality / static_cast<double>(q);
  const double possible = q >= 63 ? static_cast<double>(n) : std::min(std::ldexp(1.0, static_cast<int>(q)), static_cast<double>(n));
  s.distinct_labelsets = sets.size();
  s.diversity = static_cast<double>(sets.size()) / possible;
  return s;
}

// --- ARFF --------------------------------------------------------------

namespace detail {

inline std::string unquote(std::string_view s) {
  s = text::trim(s);
  if (s.size() >= 2 && (s.front() == '\'' || s.front() == '"') && s.back() == s.front())
    return std::string(s.substr(1, s.size() - 2));
  return std::string(s);
}

// Splits "name rest" where name may be quoted.
inline std::pair<std::string, std::string> split_name(std::string_view s) {
  s = text::trim(s);
  if (!s.empty() && (s.front() == '\'' || s.front() == '"')) {
    auto close = s.find(s.front(), 1);
    if (close == std::string_view::npos) return {std::string(s), {}};
    return {std::string(s.substr(1, close - 1)), std::string(text::trim(s.substr(close + 1)))};
  }
  auto ws = s.find_first_of(" \t");
  if (ws == std::string_view::npos) return {std::string(s), {}};
  return {std::string(s.substr(0, ws)), std::string(text::trim(s.substr(ws)))};
}

inline bool needs_quotes(std::string_view s) { return s.find_first_of(" \t,{}'\"%") != std::string_view::npos || s.empty(); }

inline std::string quote_if_needed(std::string_view s) {
  if (!needs_quotes(s)) return std::string(s);
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += '\\';
    out += c;
  }
  return out + "'";
}

struct RawAttribute {
  std::string name;
  bool nominal = false;
  std::vector<std::string> values;
};

/// Imputes missing cells (NaN) with the column mean, or the mode for categorical columns.
inline void impute(RealMatrix& x, const std::vector<bool>& categorical) {
  for (std::size_t j = 0; j < x.cols(); ++j) {
    double fill = 0;
    if (categorical[j]) {
      std::map<double, std::size_t> counts;
      for (std::size_t i = 0; i < x.rows(); ++i)
        if (!std::isnan(x(i, j))) ++counts[x(i, j)];
      std::size_t best = 0;
      for (auto [v, c] : counts)
        if (c > best) best = c, fill = v;
    } else {
      double sum = 0;
      std::size_t cnt = 0;
      for (std::size_t i = 0; i < x.rows(); ++i)
        if (!std::isnan(x(i, j))) sum += x(i, j), ++cnt;
      fill = cnt ? sum / static_cast<double>(cnt) : 0.0;
    }
    for (std::size_t i = 0; i < x.rows(); ++i)
      if (std::isnan(x(i, j))) x(i, j) = fill;
  }
}

}  // namespace detail

/// Parses a MEKA-style ARFF file. The relation name carries `-C c`: c > 0
/// means the first c attributes are labels, c < 0 the last |c|.
inline MLDataset parse_arff(std::istream& in) {
  std::string relation;
  long long c_tag = 0;
  bool have_c = false;
  std::vector<detail::RawAttribute> attrs;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> row_lines;
  bool in_data = false;
  std::string line;
  std::size_t lineno = 0;

  while (std::getline(in, line)) {
    ++lineno;
    auto t = text::trim(line);
    if (t.empty() || t.front() == '%') continue;
    if (!in_data) {
      if (text::starts_with_ci(t, "@relation")) {
        relation = detail::unquote(t.substr(9));
        auto pos = relation.find("-C");
        if (pos == std::string::npos) throw ParseError("relation lacks the -C label-count tag", lineno);
        std::istringstream rest(relation.substr(pos + 2));
        if (!(rest >> c_tag) || c_tag == 0) throw ParseError("malformed -C tag in relation", lineno);
        have_c = true;
        auto colon = relation.find(':');
        relation = std::string(text::trim(relation.substr(0, colon == std::string::npos ? pos : colon)));
      } else if (text::starts_with_ci(t, "@attribute")) {
        auto [name, type] = detail::split_name(t.substr(10));
        detail::RawAttribute a;
        a.name = name;
        if (!type.empty() && type.front() == '{') {
          auto close = type.rfind('}');
          if (close == std::string::npos) throw ParseError("unterminated nominal domain", lineno);
          a.nominal = true;
          for (auto& v : text::split_top_level(std::string_view(type).substr(1, close - 1), ','))
            a.values.push_back(detail::unquote(v));
        } else {
          auto lt = text::lower(type);
          if (lt != "numeric" && lt != "real" && lt != "integer")
            throw ParseError("unsupported attribute type '" + type + "'", lineno);
        }
        attrs.push_back(std::move(a));
      } else if (text::starts_with_ci(t, "@data")) {
        in_data = true;
      } else {
        throw ParseError("unexpected header line", lineno);
      }
      continue;
    }
    if (t.front() == '{') throw ParseError("sparse ARFF rows are not supported", lineno);
    auto fields = text::split_top_level(t, ',');
    if (fields.size() != attrs.size())
      throw ParseError("data row has " + std::to_string(fields.size()) + " values, expected " +
                           std::to_string(attrs.size()),
                       lineno);
    rows.push_back(std::move(fields));
    row_lines.push_back(lineno);
  }
  if (!have_c) throw ParseError("missing @relation with -C tag");
  const std::size_t q = static_cast<std::size_t>(c_tag > 0 ? c_tag : -c_tag);
  if (q >= attrs.size()) throw ParseError("-C label count leaves no feature attributes");
  if (rows.empty()) throw ParseError("no data rows");

  std::vector<std::size_t> label_idx, feat_idx;
  for (std::size_t a = 0; a < attrs.size(); ++a) {
    const bool is_label = c_tag > 0 ? a < q : a >= attrs.size() - q;
    (is_label ? label_idx : feat_idx).push_back(a);
  }
  for (auto a : label_idx) {
    if (!attrs[a].nominal) continue;
    for (auto& v : attrs[a].values)
      if (v != "0" && v != "1") throw ParseError("label attribute '" + attrs[a].name + "' is not binary");
  }

  MLDataset ds;
  ds.name = relation;
  ds.features = RealMatrix(rows.size(), feat_idx.size());
  ds.labels = BinaryMatrix(rows.size(), q);
  for (auto a : label_idx) ds.label_names.push_back(attrs[a].name);
  for (auto a : feat_idx) {
    ds.feature_names.push_back(attrs[a].name);
    ds.categorical.push_back(attrs[a].nominal);
    ds.nominal_values.push_back(attrs[a].nominal ? attrs[a].values : std::vector<std::string>{});
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < q; ++j) {
      auto v = detail::unquote(rows[i][label_idx[j]]);
      if (v == "1")
        ds.labels(i, j) = 1;
      else if (v == "0")
        ds.labels(i, j) = 0;
      else if (auto r = text::parse_real(v); r && (*r == 0.0 || *r == 1.0))
        ds.labels(i, j) = static_cast<std::uint8_t>(*r);
      else
        throw ParseError("non-binary label value '" + v + "'", row_lines[i]);
    }
    for (std::size_t j = 0; j < feat_idx.size(); ++j) {
      const auto& attr = attrs[feat_idx[j]];
      auto v = detail::unquote(rows[i][feat_idx[j]]);
      if (v == "?") {
        ds.features(i, j) = std::nan("");
      } else if (attr.nominal) {
        auto it = std::find(attr.values.begin(), attr.values.end(), v);
        if (it == attr.values.end()) throw ParseError("value '" + v + "' not in nominal domain", row_lines[i]);
        ds.features(i, j) = static_cast<double>(it - attr.values.begin());
      } else {
        auto r = text::parse_real(v);
        if (!r) throw ParseError("non-numeric value '" + v + "'", row_lines[i]);
        ds.features(i, j) = *r;
      }
    }
  }
  detail::impute(ds.features, ds.categorical);
  ds.validate();
  return ds;
}

inline MLDataset parse_arff_string(const std::string& s) {
  std::istringstream in(s);
  return parse_arff(in);
}

/// Writes the dataset as ARFF with labels first (`-C q`).
inline void write_arff(const MLDataset& ds, std::ostream& os) {
  os << "@relation '" << ds.name << ": -C " << ds.q() << "'\n\n";
  for (auto& l : ds.label_names) os << "@attribute " << detail::quote_if_needed(l) << " {0,1}\n";
  for (std::size_t j = 0; j < ds.m(); ++j) {
    os << "@attribute " << detail::quote_if_needed(ds.feature_names[j]) << ' ';
    if (ds.categorical[j]) {
      os << '{';
      for (std::size_t k = 0; k < ds.nominal_values[j].size(); ++k)
        os << (k ? "," : "") << detail::quote_if_needed(ds.nominal_values[j][k]);
      os << "}\n";
    } else {
      os << "numeric\n";
    }
  }
  os << "\n@data\n";
  for (std::size_t i = 0; i < ds.n(); ++i) {
    for (std::size_t j = 0; j < ds.q(); ++j) os << (j ? "," : "") << int(ds.labels(i, j));
    for (std::size_t j = 0; j < ds.m(); ++j) {
      os << ',';
      if (ds.categorical[j])
        os << detail::quote_if_needed(ds.nominal_values[j][static_cast<std::size_t>(ds.features(i, j))]);
      else
        os << text::format_real(ds.features(i, j));
    }
    os << '\n';
  }
}

/// Label columns in a CSV file: the first or last `count` columns.
struct CsvLabelSpec {
  bool first = true;
  std::size_t count = 1;

  /// Parses `first:<q>` or `last:<q>`.
  static CsvLabelSpec parse(std::string_view s) {
    auto colon = s.find(':');
    if (colon == std::string_view::npos) throw ParseError("label spec must be first:<q> or last:<q>");
    CsvLabelSpec spec;
    auto where = s.substr(0, colon);
    if (where == "first")
      spec.first = true;
    else if (where == "last")
      spec.first = false;
    else
      throw ParseError("label spec must be first:<q> or last:<q>");
    auto q = text::parse_int(s.substr(colon + 1));
    if (!q || *q < 1) throw ParseError("label count must be a positive integer");
    spec.count = static_cast<std::size_t>(*q);
    return spec;
  }
};

/// Numeric CSV with a mandatory header row. Empty cells and `?` are missing.
inline MLDataset parse_csv(std::istream& in, CsvLabelSpec spec, std::string name = "csv") {
  std::vector<std::string> header, fields;
  if (!text::read_csv_row(in, header)) throw ParseError("empty CSV input");
  if (spec.count >= header.size()) throw ParseError("label count leaves no feature columns", 1);
  const std::size_t q = spec.count;
  const std::size_t m = header.size() - q;
  MLDataset ds;
  ds.name = std::move(name);
  ds.features = RealMatrix(0, m);
  ds.labels = BinaryMatrix(0, q);
  std::vector<double> frow(m);
  std::vector<std::uint8_t> lrow(q);
  std::size_t lineno = 1;
  while (text::read_csv_row(in, fields)) {
    ++lineno;
    if (fields.size() == 1 && text::trim(fields[0]).empty()) continue;
    if (fields.size() != header.size()) throw ParseError("row arity mismatch", lineno);
    std::size_t fi = 0, li = 0;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const bool is_label = spec.first ? c < q : c >= m;
      auto v = text::trim(fields[c]);
      if (is_label) {
        if (v == "1")
          lrow[li++] = 1;
        else if (v == "0")
          lrow[li++] = 0;
        else
          throw ParseError("non-binary label value '" + std::string(v) + "'", lineno);
      } else if (v.empty() || v == "?") {
        frow[fi++] = std::nan("");
      } else {
        auto r = text::parse_real(v);
        if (!r) throw ParseError("non-numeric value '" + std::string(v) + "'", lineno);
        frow[fi++] = *r;
      }
    }
    ds.features.append_row(frow);
    ds.labels.append_row(lrow);
  }
  if (ds.features.rows() == 0) throw ParseError("no data rows");
  for (std::size_t c = 0; c < header.size(); ++c) {
    const bool is_label = spec.first ? c < q : c >= m;
    (is_label ? ds.label_names : ds.feature_names).push_back(std::string(text::trim(header[c])));
  }
  ds.categorical.assign(m, false);
  ds.nominal_values.assign(m, {});
  detail::impute(ds.features, ds.categorical);
  ds.validate();
  return ds;
}

/// Loads `.arff` files directly; anything else is read as CSV using `labels`.
inline MLDataset load_dataset(const std::string& path, std::optional<CsvLabelSpec> labels = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset '" + path + "'");
  const bool arff = path.size() >= 5 && text::lower(path.substr(path.size() - 5)) == ".arff";
  if (arff) return parse_arff(in);
  if (!labels) throw std::invalid_argument("CSV dataset '" + path + "' needs a label spec (first:<q> or last:<q>)");
  auto stem = path.substr(path.find_last_of('/') + 1);
  return parse_csv(in, *labels, stem.substr(0, stem.find('.')));
}

// --- stratification ----------------------------------------------------

/// fold_of[i] is the fold of example i.
struct FoldAssignment {
  std::vector<std::size_t> fold_of;
  std::size_t folds = 0;

  std::vector<std::size_t> members(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
      if (fold_of[i] == fold) out.push_back(i);
    return out;
  }
  std::vector<std::size_t> complement(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
      if (fold_of[i] != fold) out.push_back(i);
    return out;
  }
};

/// Iterative stratification over arbitrary fold proportions. Examples of the
/// label with the fewest remaining positives are placed first, each into the
/// fold with the greatest remaining demand for that label; ties go to the
/// fold with more remaining capacity, then the lower index. The seed fixes
/// the order in which examples are visited.
inline FoldAssignment iterative_stratification(const MLDataset& ds, std::span<const double> ratios, std::uint64_t seed) {
  const std::size_t n = ds.n(), q = ds.q(), k = ratios.size();
  Rng rng(seed);
  const auto order = random_permutation(n, rng);

  std::vector<double> capacity(k);
  std::vector<std::vector<double>> demand(q, std::vector<double>(k));
  std::vector<std::size_t> remaining_pos(q, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 0; l < q; ++l) remaining_pos[l] += ds.labels(i, l);
  for (std::size_t j = 0; j < k; ++j) {
    capacity[j] = ratios[j] * static_cast<double>(n);
    for (std::size_t l = 0; l < q; ++l) demand[l][j] = ratios[j] * static_cast<double>(remaining_pos[l]);
  }

  FoldAssignment fa;
  fa.folds = k;
  constexpr auto unassigned = static_cast<std::size_t>(-1);
  fa.fold_of.assign(n, unassigned);

  auto place = [&](std::size_t i, std::size_t fold) {
    fa.fold_of[i] = fold;
    capacity[fold] -= 1;
    for (std::size_t l = 0; l < q; ++l)
      if (ds.labels(i, l)) {
        demand[l][fold] -= 1;
        --remaining_pos[l];
      }
  };

  while (true) {
    std::size_t label = q;
    for (std::size_t l = 0; l < q; ++l)
      if (remaining_pos[l] > 0 && (label == q || remaining_pos[l] < remaining_pos[label])) label = l;
    if (label == q) break;
    for (auto i : order) {
      if (fa.fold_of[i] != unassigned || !ds.labels(i, label)) continue;
      std::size_t best = 0;
      for (std::size_t j = 1; j < k; ++j) {
        if (demand[label][j] > demand[label][best] ||
            (demand[label][j] == demand[label][best] && capacity[j] > capacity[best]))
          best = j;
      }
      place(i, best);
    }
  }
  for (auto i : order) {
    if (fa.fold_of[i] != unassigned) continue;
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j)
      if (capacity[j] > capacity[best]) best = j;
    place(i, best);
  }
  return fa;
}

inline FoldAssignment iterative_stratified_kfold(const MLDataset& ds, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("k-fold needs k >= 2");
  if (k > ds.n()) throw std::invalid_argument("k-fold needs k <= n");
  std::vector<double> ratios(k, 1.0 / static_cast<double>(k));
  return iterative_stratification(ds, ratios, seed);
}

/// Stratified learn/validation split; `fraction` is the validation share.
/// Returns {learn, validation}.
inline std::pair<MLDataset, MLDataset> split_learn_validation(const MLDataset& ds, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("validation fraction must lie in (0,1)");
  const double ratios[2] = {fraction, 1.0 - fraction};
  auto fa = iterative_stratification(ds, ratios, seed);
  auto valid = fa.members(0);
  auto learn = fa.members(1);
  if (valid.empty() || learn.empty()) throw std::invalid_argument("validation fraction leaves an empty part");
  return {ds.subset(learn), ds.subset(valid)};
}

}  // namespace automlc
