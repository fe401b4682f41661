#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "automlc/core/errors.hpp"
#include "automlc/core/random.hpp"
#include "automlc/core/text.hpp"
#include "automlc/expression.hpp"
#include "automlc/pipeline.hpp"

namespace automlc {

enum class TerminalKind { algorithm, categorical, integer, real };

inline const char* kind_name(TerminalKind k) {
  switch (k) {
    case TerminalKind::algorithm: return "algorithm";
    case TerminalKind::categorical: return "categorical";
    case TerminalKind::integer: return "integer";
    case TerminalKind::real: return "real";
  }
  return "?";
}

/// A named hyperparameter terminal with its domain and default.
/// Values travel as canonical text.
struct Hyperparameter {
  std::string name;
  TerminalKind kind = TerminalKind::categorical;
  std::vector<std::string> choices;
  double lo = 0, hi = 0;
  std::optional<double> step;
  bool log = false;
  std::string default_value;

  bool contains(std::string_view value) const {
    switch (kind) {
      case TerminalKind::categorical:
        return std::find(choices.begin(), choices.end(), value) != choices.end();
      case TerminalKind::integer: {
        auto v = text::parse_int(value);
        if (!v || *v < lo || *v > hi) return false;
        if (step) return std::fmod(static_cast<double>(*v) - lo, *step) == 0.0;
        return true;
      }
      case TerminalKind::real: {
        auto v = text::parse_real(value);
        if (!v || !std::isfinite(*v) || *v < lo || *v > hi) return false;
        if (step) {
          double k = (*v - lo) / *step;
          return std::abs(k - std::round(k)) < 1e-9;
        }
        return true;
      }
      case TerminalKind::algorithm: return false;
    }
    return false;
  }

  /// Canonical text of a value already known to be in the domain.
  std::string canonical(std::string_view value) const {
    switch (kind) {
      case TerminalKind::integer: return std::to_string(*text::parse_int(value));
      case TerminalKind::real: return text::format_real(*text::parse_real(value));
      default: return std::string(value);
    }
  }

  bool enumerable() const { return kind == TerminalKind::categorical || kind == TerminalKind::integer || step.has_value(); }

  /// Every value of a finite domain, in ascending order.
  std::vector<std::string> grid() const {
    if (kind == TerminalKind::categorical) return choices;
    if (!enumerable()) throw UnsupportedError("hyperparameter '" + name + "' has a continuous domain");
    std::vector<std::string> out;
    const double s = step.value_or(1.0);
    for (long long i = 0;; ++i) {
      double v = text::snap(lo + static_cast<double>(i) * s);
      if (v > hi + 1e-12 * std::max(1.0, std::abs(hi))) break;
      v = std::min(v, hi);
      out.push_back(kind == TerminalKind::integer ? std::to_string(std::llround(v)) : text::format_real(v));
    }
    return out;
  }

  std::string sample(Rng& rng) const {
    if (kind == TerminalKind::categorical) return choices[uniform_index(rng, choices.size())];
    if (step) {
      auto g = grid();
      return g[uniform_index(rng, g.size())];
    }
    if (kind == TerminalKind::integer) {
      auto span = static_cast<std::size_t>(hi - lo) + 1;
      return std::to_string(static_cast<long long>(lo) + static_cast<long long>(uniform_index(rng, span)));
    }
    double v = log ? std::exp(uniform_real(rng, std::log(lo), std::log(hi))) : uniform_real(rng, lo, hi);
    return text::format_real(std::clamp(v, lo, hi));
  }

  friend bool operator==(const Hyperparameter&, const Hyperparameter&) = default;
};

struct Symbol {
  enum class Type { nonterminal, literal, algorithm, hyperparameter };

  Type type = Type::literal;
  std::string text;  // nonterminal name, literal text or algorithm name
  int index = -1;    // nonterminal index once resolved
  Hyperparameter hp;

  bool is_terminal() const { return type != Type::nonterminal; }
  /// Literal of the form `key=value`; attaches a setting instead of naming an algorithm.
  bool is_setting() const { return type == Type::literal && text.find('=') != std::string::npos; }
  bool opens_node() const { return type == Type::algorithm || (type == Type::literal && !is_setting()); }

  friend bool operator==(const Symbol&, const Symbol&) = default;
};

using Alternative = std::vector<Symbol>;

struct Production {
  std::string name;
  std::vector<Alternative> alternatives;

  friend bool operator==(const Production&, const Production&) = default;
};

/// A typed context-free grammar. Production 0 holds the start symbol.
/// Built by parse_grammar and treated as immutable afterwards.
struct Grammar {
  std::vector<Production> productions;
  std::optional<std::string> init;
  int max_depth = 15;

  // Derived by finalize().
  std::vector<int> min_depth;
  std::vector<std::vector<int>> alt_depth;

  int index_of(std::string_view name) const {
    for (std::size_t i = 0; i < productions.size(); ++i)
      if (productions[i].name == name) return static_cast<int>(i);
    return -1;
  }
  std::size_t size() const { return productions.size(); }
  const Production& at(int nt) const { return productions.at(static_cast<std::size_t>(nt)); }

  /// Resolves references and computes derivation depths. Throws ParseError
  /// naming the offending symbol.
  void finalize();

  friend bool operator==(const Grammar& a, const Grammar& b) {
    return a.productions == b.productions && a.init == b.init && a.max_depth == b.max_depth;
  }
};

inline void Grammar::finalize() {
  constexpr int inf = std::numeric_limits<int>::max() / 2;
  if (productions.empty()) throw ParseError("grammar has no productions");
  for (auto& p : productions) {
    if (p.alternatives.empty()) throw ParseError("nonterminal <" + p.name + "> has no alternatives");
    for (auto& alt : p.alternatives) {
      if (alt.empty()) throw ParseError("nonterminal <" + p.name + "> has an empty alternative");
      for (auto& s : alt) {
        if (s.type == Symbol::Type::nonterminal) {
          s.index = index_of(s.text);
          if (s.index < 0) throw ParseError("undefined nonterminal <" + s.text + "> used by <" + p.name + ">");
        }
        if (s.type == Symbol::Type::hyperparameter && !s.hp.contains(s.hp.default_value))
          throw ParseError("default '" + s.hp.default_value + "' outside the domain of '" + s.hp.name + "' in <" + p.name + ">");
      }
    }
  }

  std::vector<bool> reached(size(), false);
  std::vector<int> todo{0};
  reached[0] = true;
  while (!todo.empty()) {
    int nt = todo.back();
    todo.pop_back();
    for (auto& alt : at(nt).alternatives)
      for (auto& s : alt)
        if (s.type == Symbol::Type::nonterminal && !reached[static_cast<std::size_t>(s.index)]) {
          reached[static_cast<std::size_t>(s.index)] = true;
          todo.push_back(s.index);
        }
  }
  for (std::size_t i = 0; i < size(); ++i)
    if (!reached[i]) throw ParseError("unreachable nonterminal <" + productions[i].name + ">");

  min_depth.assign(size(), inf);
  alt_depth.assign(size(), {});
  for (std::size_t i = 0; i < size(); ++i) alt_depth[i].assign(productions[i].alternatives.size(), inf);
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i < size(); ++i) {
      for (std::size_t a = 0; a < productions[i].alternatives.size(); ++a) {
        int d = 1;
        for (auto& s : productions[i].alternatives[a])
          if (s.type == Symbol::Type::nonterminal) d = std::max(d, min_depth[static_cast<std::size_t>(s.index)] >= inf ? inf : min_depth[static_cast<std::size_t>(s.index)] + 1);
        if (d < alt_depth[i][a]) {
          alt_depth[i][a] = d;
          changed = true;
        }
        if (d < min_depth[i]) min_depth[i] = d;
      }
    }
  }
  for (std::size_t i = 0; i < size(); ++i)
    if (min_depth[i] >= inf) throw ParseError("non-terminating nonterminal <" + productions[i].name + ">");
  if (min_depth[0] > max_depth)
    throw ParseError("start symbol <" + productions[0].name + "> needs depth " + std::to_string(min_depth[0]) +
                     " but max_depth is " + std::to_string(max_depth));
}

// --- grammar text ---------------------------------------------------------

namespace detail {

class GrammarLineParser {
 public:
  GrammarLineParser(std::string_view s, std::size_t line) : s_(s), line_(line) {}

  std::vector<Alternative> parse_alternatives() {
    std::vector<Alternative> alts(1);
    while (true) {
      skip_ws();
      if (pos_ >= s_.size()) break;
      char c = s_[pos_];
      if (c == '|') {
        ++pos_;
        alts.emplace_back();
        continue;
      }
      alts.back().push_back(parse_symbol());
    }
    for (auto& a : alts)
      if (a.empty()) fail("empty alternative");
    return alts;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const { throw ParseError("grammar: " + why, line_); }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  std::string quoted() {
    ++pos_;  // opening quote
    auto end = s_.find('"', pos_);
    if (end == std::string_view::npos) fail("unterminated string");
    std::string out(s_.substr(pos_, end - pos_));
    pos_ = end + 1;
    return out;
  }

  std::string word() {
    auto start = pos_;
    while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) && s_[pos_] != '|') ++pos_;
    return std::string(s_.substr(start, pos_ - start));
  }

  Symbol parse_symbol() {
    Symbol sym;
    char c = s_[pos_];
    if (c == '<') {
      auto end = s_.find('>', pos_);
      if (end == std::string_view::npos) fail("unterminated nonterminal");
      sym.type = Symbol::Type::nonterminal;
      sym.text = std::string(text::trim(s_.substr(pos_ + 1, end - pos_ - 1)));
      if (sym.text.empty()) fail("empty nonterminal name");
      pos_ = end + 1;
      return sym;
    }
    if (c == '"') {
      sym.type = Symbol::Type::literal;
      sym.text = quoted();
      if (sym.text.empty()) fail("empty literal");
      return sym;
    }
    if (s_.substr(pos_, 4) == "alg\"") {
      pos_ += 3;
      sym.type = Symbol::Type::algorithm;
      sym.text = quoted();
      if (sym.text.empty()) fail("empty algorithm name");
      return sym;
    }
    return parse_hyperparameter();
  }

  Symbol parse_hyperparameter() {
    auto start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ':' && !std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (pos_ >= s_.size() || s_[pos_] != ':') fail("unexpected token '" + std::string(s_.substr(start, pos_ - start)) + "'");
    Symbol sym;
    sym.type = Symbol::Type::hyperparameter;
    auto& hp = sym.hp;
    hp.name = std::string(s_.substr(start, pos_ - start));
    sym.text = hp.name;
    if (hp.name.empty()) fail("hyperparameter without a name");
    ++pos_;
    auto kstart = pos_;
    while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    auto kind = s_.substr(kstart, pos_ - kstart);
    if (kind == "cat") hp.kind = TerminalKind::categorical;
    else if (kind == "int") hp.kind = TerminalKind::integer;
    else if (kind == "float" || kind == "real") hp.kind = TerminalKind::real;
    else fail("unknown hyperparameter kind '" + std::string(kind) + "' for '" + hp.name + "'");

    const char open = hp.kind == TerminalKind::categorical ? '{' : '[';
    const char close = hp.kind == TerminalKind::categorical ? '}' : ']';
    if (pos_ >= s_.size() || s_[pos_] != open) fail("expected '" + std::string(1, open) + "' after kind of '" + hp.name + "'");
    auto end = s_.find(close, pos_);
    if (end == std::string_view::npos) fail("unterminated domain of '" + hp.name + "'");
    auto body = s_.substr(pos_ + 1, end - pos_ - 1);
    pos_ = end + 1;
    auto parts = text::split_top_level(body, ',');
    if (hp.kind == TerminalKind::categorical) {
      for (auto& p : parts) {
        auto t = std::string(text::trim(p));
        if (t.empty()) fail("empty choice in '" + hp.name + "'");
        if (std::find(hp.choices.begin(), hp.choices.end(), t) != hp.choices.end()) fail("duplicate choice '" + t + "' in '" + hp.name + "'");
        hp.choices.push_back(t);
      }
    } else {
      if (parts.size() != 2) fail("range of '" + hp.name + "' needs two bounds");
      auto lo = text::parse_real(parts[0]), hi = text::parse_real(parts[1]);
      if (!lo || !hi || !(*lo <= *hi)) fail("bad range for '" + hp.name + "'");
      hp.lo = *lo;
      hp.hi = *hi;
      if (hp.kind == TerminalKind::integer && (hp.lo != std::floor(hp.lo) || hp.hi != std::floor(hp.hi)))
        fail("integer range of '" + hp.name + "' has fractional bounds");
    }
    if (pos_ >= s_.size() || s_[pos_] != '=') fail("hyperparameter '" + hp.name + "' needs a default ('=value')");
    ++pos_;
    hp.default_value = word();
    if (hp.default_value.empty()) fail("empty default for '" + hp.name + "'");

    while (true) {
      auto save = pos_;
      skip_ws();
      auto w = word();
      if (w == "log") {
        if (hp.kind != TerminalKind::real) fail("'log' applies to real hyperparameters only");
        if (!(hp.lo > 0)) fail("log-scaled '" + hp.name + "' needs a positive lower bound");
        hp.log = true;
      } else if (w == "step") {
        if (hp.kind == TerminalKind::categorical) fail("'step' does not apply to categorical '" + hp.name + "'");
        skip_ws();
        auto v = text::parse_real(word());
        if (!v || !(*v > 0)) fail("bad step for '" + hp.name + "'");
        if (hp.kind == TerminalKind::integer && *v != std::floor(*v)) fail("integer step must be whole");
        hp.step = *v;
      } else {
        pos_ = save;
        break;
      }
    }
    // Normalise the default; a malformed default is caught by finalize().
    if (hp.contains(hp.default_value)) hp.default_value = hp.canonical(hp.default_value);
    return sym;
  }

  std::string_view s_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

inline std::string strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return std::string(line.substr(0, i));
  }
  return std::string(line);
}

}  // namespace detail

/// Reads the line-oriented grammar format:
///   <nt> ::= alt | alt      (lines starting with '|' continue the previous rule)
///   "literal"  alg"NAME"  name:cat{a,b}=a  name:int[1,50]=10 [step 5]
///   name:float[1e-8,10]=1e-8 [log] [step x]
///   @init <expression>      @max_depth <n>      # comment
inline Grammar parse_grammar(std::istream& in) {
  Grammar g;
  std::string raw;
  std::size_t lineno = 0;
  Production* current = nullptr;
  std::set<std::string> seen;
  while (std::getline(in, raw)) {
    ++lineno;
    auto line = detail::strip_comment(raw);
    auto t = text::trim(line);
    if (t.empty()) continue;
    if (t.front() == '@') {
      auto sp = t.find_first_of(" \t");
      auto key = t.substr(0, sp);
      auto rest = sp == std::string_view::npos ? std::string_view{} : text::trim(t.substr(sp));
      if (key == "@init") {
        if (g.init) throw ParseError("grammar: more than one @init", lineno);
        if (rest.empty()) throw ParseError("grammar: @init needs an expression", lineno);
        parse_expression(rest);
        g.init = std::string(rest);
      } else if (key == "@max_depth") {
        auto v = text::parse_int(rest);
        if (!v || *v < 1) throw ParseError("grammar: bad @max_depth", lineno);
        g.max_depth = static_cast<int>(*v);
      } else {
        throw ParseError("grammar: unknown directive '" + std::string(key) + "'", lineno);
      }
      current = nullptr;
      continue;
    }
    if (t.front() == '|') {
      if (!current) throw ParseError("grammar: continuation line without a rule", lineno);
      auto alts = detail::GrammarLineParser(t.substr(1), lineno).parse_alternatives();
      for (auto& a : alts) current->alternatives.push_back(std::move(a));
      continue;
    }
    auto arrow = t.find("::=");
    if (t.front() != '<' || arrow == std::string_view::npos) throw ParseError("grammar: expected '<name> ::= ...'", lineno);
    auto lhs = text::trim(t.substr(0, arrow));
    if (lhs.size() < 3 || lhs.back() != '>') throw ParseError("grammar: malformed left-hand side", lineno);
    std::string name(text::trim(lhs.substr(1, lhs.size() - 2)));
    if (!seen.insert(name).second) throw ParseError("grammar: duplicate rule for <" + name + ">", lineno);
    g.productions.push_back(Production{name, detail::GrammarLineParser(t.substr(arrow + 3), lineno).parse_alternatives()});
    current = &g.productions.back();
  }
  g.finalize();
  return g;
}

inline Grammar parse_grammar(std::string_view textv) {
  std::istringstream in{std::string(textv)};
  return parse_grammar(in);
}

inline std::string format_symbol(const Symbol& s) {
  switch (s.type) {
    case Symbol::Type::nonterminal: return "<" + s.text + ">";
    case Symbol::Type::literal: return "\"" + s.text + "\"";
    case Symbol::Type::algorithm: return "alg\"" + s.text + "\"";
    case Symbol::Type::hyperparameter: break;
  }
  const auto& hp = s.hp;
  std::string out = hp.name + ":";
  if (hp.kind == TerminalKind::categorical) {
    out += "cat{";
    for (std::size_t i = 0; i < hp.choices.size(); ++i) out += (i ? "," : "") + hp.choices[i];
    out += "}";
  } else {
    out += hp.kind == TerminalKind::integer ? "int[" : "float[";
    out += text::format_real(hp.lo) + "," + text::format_real(hp.hi) + "]";
  }
  out += "=" + hp.default_value;
  if (hp.log) out += " log";
  if (hp.step) out += " step " + text::format_real(*hp.step);
  return out;
}

/// Text that parse_grammar reads back into an equal grammar.
inline std::string format_grammar(const Grammar& g) {
  std::string out;
  if (g.max_depth != 15) out += "@max_depth " + std::to_string(g.max_depth) + "\n";
  if (g.init) out += "@init " + *g.init + "\n";
  for (auto& p : g.productions) {
    out += "<" + p.name + "> ::=";
    for (std::size_t a = 0; a < p.alternatives.size(); ++a) {
      if (a) out += " |";
      for (auto& s : p.alternatives[a]) out += " " + format_symbol(s);
    }
    out += "\n";
  }
  return out;
}

// --- derivation trees --------------------------------------------------------

/// Nonterminal nodes carry (symbol, alt, children); terminal nodes carry a value.
struct TreeNode {
  int symbol = -1;
  int alt = 0;
  std::string value;
  std::vector<TreeNode> children;

  bool is_terminal() const noexcept { return symbol < 0; }

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

using DerivationTree = TreeNode;
using NodePath = std::vector<std::size_t>;

/// Height counted in nonterminal levels; a node whose alternative has only
/// terminals has height 1.
inline int tree_height(const TreeNode& n) {
  if (n.is_terminal()) return 0;
  int h = 0;
  for (auto& c : n.children) h = std::max(h, tree_height(c));
  return h + 1;
}

inline void collect_nonterminals(const TreeNode& n, NodePath& path, std::vector<NodePath>& out) {
  if (n.is_terminal()) return;
  out.push_back(path);
  for (std::size_t i = 0; i < n.children.size(); ++i) {
    path.push_back(i);
    collect_nonterminals(n.children[i], path, out);
    path.pop_back();
  }
}

/// Paths of all nonterminal nodes in preorder; the root is the empty path.
inline std::vector<NodePath> nonterminal_paths(const TreeNode& root) {
  std::vector<NodePath> out;
  NodePath path;
  collect_nonterminals(root, path, out);
  return out;
}

inline const TreeNode& node_at(const TreeNode& root, const NodePath& path) {
  const TreeNode* n = &root;
  for (auto i : path) n = &n->children.at(i);
  return *n;
}

inline TreeNode& node_at(TreeNode& root, const NodePath& path) {
  TreeNode* n = &root;
  for (auto i : path) n = &n->children.at(i);
  return *n;
}

inline TreeNode grow_from(const Grammar& g, int nt, int depth_budget, Rng& rng) {
  const auto& depths = g.alt_depth[static_cast<std::size_t>(nt)];
  std::vector<int> eligible;
  for (std::size_t a = 0; a < depths.size(); ++a)
    if (depths[a] <= depth_budget) eligible.push_back(static_cast<int>(a));
  if (eligible.empty())
    throw std::logic_error("grow: <" + g.at(nt).name + "> cannot be derived within depth " + std::to_string(depth_budget));
  TreeNode node;
  node.symbol = nt;
  node.alt = eligible[uniform_index(rng, eligible.size())];
  for (const auto& s : g.at(nt).alternatives[static_cast<std::size_t>(node.alt)]) {
    TreeNode child;
    switch (s.type) {
      case Symbol::Type::nonterminal: child = grow_from(g, s.index, depth_budget - 1, rng); break;
      case Symbol::Type::hyperparameter: child.value = s.hp.sample(rng); break;
      default: child.value = s.text; break;
    }
    node.children.push_back(std::move(child));
  }
  return node;
}

/// Random derivation no deeper than max_depth (default: the grammar's cap).
inline DerivationTree grow(const Grammar& g, Rng& rng, std::optional<int> max_depth = std::nullopt) {
  int d = max_depth.value_or(g.max_depth);
  if (d < g.min_depth[0])
    throw std::invalid_argument("grow: max_depth " + std::to_string(d) + " below the minimal derivation depth " +
                                std::to_string(g.min_depth[0]));
  return grow_from(g, 0, d, rng);
}

namespace detail {

inline bool validate_node(const TreeNode& n, const Grammar& g, int nt) {
  if (n.symbol != nt || n.alt < 0) return false;
  const auto& alts = g.at(nt).alternatives;
  if (static_cast<std::size_t>(n.alt) >= alts.size()) return false;
  const auto& alt = alts[static_cast<std::size_t>(n.alt)];
  if (n.children.size() != alt.size() || !n.value.empty()) return false;
  for (std::size_t i = 0; i < alt.size(); ++i) {
    const auto& s = alt[i];
    const auto& c = n.children[i];
    if (s.type == Symbol::Type::nonterminal) {
      if (!validate_node(c, g, s.index)) return false;
      continue;
    }
    if (!c.is_terminal() || !c.children.empty()) return false;
    if (s.type == Symbol::Type::hyperparameter ? !s.hp.contains(c.value) : c.value != s.text) return false;
  }
  return true;
}

}  // namespace detail

/// True iff the tree's shape follows the grammar's alternatives, every terminal
/// lies in its domain and the tree respects the grammar's depth cap.
inline bool validate(const TreeNode& tree, const Grammar& g) {
  if (g.productions.empty() || !detail::validate_node(tree, g, 0)) return false;
  return tree_height(tree) <= g.max_depth;
}

// --- mapping -------------------------------------------------------------------

namespace detail {

struct ChainNode {
  std::string name;
  std::map<std::string, std::string> params;
  int parent = -1;
  int child = -1;
};

struct MapWalker {
  const Grammar& g;
  std::vector<ChainNode> chain;
  std::vector<int> stack;
  std::map<std::string, std::string> top_level;

  void set(std::map<std::string, std::string>& params, const std::string& key, const std::string& value) {
    if (!params.emplace(key, value).second) throw std::invalid_argument("mapping: '" + key + "' set twice");
  }

  void walk(const TreeNode& n) {
    const auto& alt = g.at(n.symbol).alternatives.at(static_cast<std::size_t>(n.alt));
    const auto mark = stack.size();
    for (std::size_t i = 0; i < alt.size(); ++i) {
      const auto& s = alt[i];
      const auto& c = n.children[i];
      if (s.type == Symbol::Type::nonterminal) {
        walk(c);
      } else if (s.opens_node()) {
        ChainNode node{c.value, {}, stack.empty() ? -1 : stack.back(), -1};
        if (stack.empty()) {
          for (auto& existing : chain)
            if (existing.parent < 0) throw std::invalid_argument("mapping: more than one outermost algorithm");
        } else {
          auto& parent = chain[static_cast<std::size_t>(stack.back())];
          if (parent.child >= 0) throw std::invalid_argument("mapping: '" + parent.name + "' receives two base algorithms");
          parent.child = static_cast<int>(chain.size());
        }
        chain.push_back(std::move(node));
        stack.push_back(static_cast<int>(chain.size()) - 1);
      } else {
        std::string key, value;
        if (s.type == Symbol::Type::hyperparameter) {
          key = s.hp.name;
          value = c.value;
        } else {
          auto eq = c.value.find('=');
          key = std::string(text::trim(std::string_view(c.value).substr(0, eq)));
          value = std::string(text::trim(std::string_view(c.value).substr(eq + 1)));
        }
        set(stack.empty() ? top_level : chain[static_cast<std::size_t>(stack.back())].params, key, value);
      }
    }
    stack.resize(mark);
  }

  ExprNode build(int i) const {
    const auto& c = chain[static_cast<std::size_t>(i)];
    ExprNode out{c.name, c.params, {}};
    if (c.child >= 0) out.inner.push_back(build(c.child));
    return out;
  }
};

}  // namespace detail

/// Left-to-right terminal walk. Algorithm tokens open nodes (nested as the
/// base of the innermost open node); hyperparameters attach to the innermost
/// open node, or to the outermost algorithm when none is open.
inline ExprNode map_to_expression(const TreeNode& tree, const Grammar& g) {
  detail::MapWalker w{g, {}, {}, {}};
  w.walk(tree);
  if (w.chain.empty()) throw std::invalid_argument("mapping: derivation names no algorithm");
  auto root = w.build(0);
  for (auto& [k, v] : w.top_level)
    if (!root.params.emplace(k, v).second) throw std::invalid_argument("mapping: '" + k + "' set twice");
  return root;
}

inline PipelineConfig map_to_config(const TreeNode& tree, const Grammar& g) {
  return PipelineConfig::from_expr(map_to_expression(tree, g));
}

// --- derivation of a given configuration --------------------------------------

namespace detail {

class Deriver {
 public:
  Deriver(const Grammar& g, const ExprNode& root) : g_(g) {
    for (const ExprNode* n = &root;; n = &n->base()) {
      chain_.push_back(n);
      if (!n->has_base()) break;
    }
  }

  std::optional<TreeNode> run() {
    State st;
    st.used.assign(chain_.size(), {});
    for (auto& [tree, end] : expand(0, g_.max_depth, st)) {
      if (end.opened != chain_.size() || !end.stack.empty()) continue;
      bool all_used = true;
      for (std::size_t i = 0; i < chain_.size(); ++i)
        for (auto& kv : chain_[i]->params)
          if (!end.used[i].count(kv.first)) all_used = false;
      if (all_used) return tree;
    }
    return std::nullopt;
  }

 private:
  struct State {
    std::size_t opened = 0;
    std::vector<std::size_t> stack;
    std::vector<std::set<std::string>> used;
  };
  using Result = std::vector<std::pair<TreeNode, State>>;
  static constexpr std::size_t kMaxPartials = 4096;

  std::size_t target(const State& st) const { return st.stack.empty() ? 0 : st.stack.back(); }

  bool same_value(const std::string& a, const std::string& b) const {
    if (a == b) return true;
    auto x = text::parse_real(a), y = text::parse_real(b);
    return x && y && *x == *y;
  }

  std::optional<std::pair<std::string, State>> terminal(const Symbol& s, const State& st) const {
    State next = st;
    if (s.opens_node()) {
      const auto d = st.opened;
      if (d >= chain_.size() || chain_[d]->name != s.text) return std::nullopt;
      if (st.stack.empty() ? d != 0 : st.stack.back() + 1 != d) return std::nullopt;
      next.stack.push_back(d);
      ++next.opened;
      return std::make_pair(s.text, std::move(next));
    }
    const auto t = target(st);
    const auto& params = chain_[t]->params;
    std::string key, value;
    if (s.type == Symbol::Type::hyperparameter) {
      key = s.hp.name;
      auto it = params.find(key);
      if (it == params.end()) {
        value = s.hp.default_value;
      } else {
        if (!s.hp.contains(it->second)) return std::nullopt;
        value = s.hp.canonical(it->second);
      }
    } else {
      auto eq = s.text.find('=');
      key = std::string(text::trim(std::string_view(s.text).substr(0, eq)));
      auto want = std::string(text::trim(std::string_view(s.text).substr(eq + 1)));
      auto it = params.find(key);
      if (it != params.end() && !same_value(it->second, want)) return std::nullopt;
      value = s.text;
    }
    if (!next.used[t].insert(key).second) return std::nullopt;
    return std::make_pair(std::move(value), std::move(next));
  }

  Result expand(int nt, int budget, const State& st) {
    Result out;
    if (budget < 1) return out;
    const auto& alts = g_.at(nt).alternatives;
    for (std::size_t a = 0; a < alts.size(); ++a) {
      if (g_.alt_depth[static_cast<std::size_t>(nt)][a] > budget) continue;
      Result partial;
      TreeNode seed;
      seed.symbol = nt;
      seed.alt = static_cast<int>(a);
      partial.emplace_back(std::move(seed), st);
      for (const auto& s : alts[a]) {
        Result next;
        for (auto& [tree, cur] : partial) {
          if (s.type == Symbol::Type::nonterminal) {
            for (auto& [sub, after] : expand(s.index, budget - 1, cur)) {
              auto t = tree;
              t.children.push_back(std::move(sub));
              next.emplace_back(std::move(t), std::move(after));
            }
          } else if (auto r = terminal(s, cur)) {
            auto t = tree;
            TreeNode leaf;
            leaf.value = std::move(r->first);
            t.children.push_back(std::move(leaf));
            next.emplace_back(std::move(t), std::move(r->second));
          }
          if (next.size() > kMaxPartials) throw UnsupportedError("derive: grammar too ambiguous");
        }
        partial = std::move(next);
        if (partial.empty()) break;
      }
      const auto mark = st.stack.size();
      for (auto& [tree, cur] : partial) {
        // Nodes opened under this nonterminal close here; each must have met its base.
        bool ok = true;
        for (std::size_t i = mark; i < cur.stack.size(); ++i) {
          auto d = cur.stack[i];
          if (chain_[d]->has_base() && cur.opened <= d + 1) ok = false;
        }
        if (!ok) continue;
        cur.stack.resize(mark);
        out.emplace_back(std::move(tree), std::move(cur));
      }
    }
    return out;
  }

  const Grammar& g_;
  std::vector<const ExprNode*> chain_;
};

}  // namespace detail

/// A derivation tree whose mapping is semantically equal to the expression.
/// Hyperparameters absent from the expression take the grammar default.
inline std::optional<DerivationTree> derive(const Grammar& g, const ExprNode& expr) {
  return detail::Deriver(g, expr).run();
}

inline std::optional<DerivationTree> derive(const Grammar& g, const PipelineConfig& cfg) { return derive(g, cfg.to_expr()); }

// --- counting and enumeration ----------------------------------------------------

using BigCount = boost::multiprecision::cpp_int;

/// Distinct algorithm choices. Hyperparameter domains contribute a factor of 1,
/// and alternatives differing only in settings count once.
inline BigCount count_combinations(const Grammar& g) {
  const auto n = g.size();
  std::vector<bool> has_alg(n, false);
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (has_alg[i]) continue;
      for (auto& alt : g.productions[i].alternatives)
        for (auto& s : alt)
          if (s.opens_node() || (s.type == Symbol::Type::nonterminal && has_alg[static_cast<std::size_t>(s.index)])) {
            has_alg[i] = true;
            changed = true;
          }
    }
  }

  std::vector<int> state(n, 0);  // 0 new, 1 on stack, 2 done
  std::vector<BigCount> memo(n);
  auto visit = [&](auto&& self, int nt) -> BigCount {
    auto i = static_cast<std::size_t>(nt);
    if (!has_alg[i]) return 1;
    if (state[i] == 2) return memo[i];
    if (state[i] == 1) throw UnsupportedError("count_combinations: <" + g.productions[i].name + "> is recursive at the algorithm level");
    state[i] = 1;
    std::set<std::vector<std::string>> seen;
    BigCount total = 0;
    for (auto& alt : g.productions[i].alternatives) {
      std::vector<std::string> key;
      for (auto& s : alt)
        if (s.opens_node()) key.push_back("a:" + s.text);
        else if (s.type == Symbol::Type::nonterminal) key.push_back("n:" + s.text);
      BigCount prod = 1;
      for (auto& s : alt)
        if (s.type == Symbol::Type::nonterminal) prod *= self(self, s.index);
      if (seen.insert(key).second) total += prod;
    }
    state[i] = 2;
    memo[i] = total;
    return total;
  };
  return visit(visit, 0);
}

namespace detail {

inline void enumerate_node(const Grammar& g, int nt, int budget, bool all_values, std::size_t limit,
                           std::vector<TreeNode>& out) {
  const auto& alts = g.at(nt).alternatives;
  for (std::size_t a = 0; a < alts.size(); ++a) {
    if (g.alt_depth[static_cast<std::size_t>(nt)][a] > budget) continue;
    std::vector<TreeNode> partial(1);
    partial[0].symbol = nt;
    partial[0].alt = static_cast<int>(a);
    for (const auto& s : alts[a]) {
      std::vector<TreeNode> options;
      if (s.type == Symbol::Type::nonterminal) {
        enumerate_node(g, s.index, budget - 1, all_values, limit, options);
      } else if (s.type == Symbol::Type::hyperparameter) {
        std::vector<std::string> values = all_values ? s.hp.grid() : std::vector<std::string>{s.hp.default_value};
        for (auto& v : values) options.push_back(TreeNode{-1, 0, v, {}});
      } else {
        options.push_back(TreeNode{-1, 0, s.text, {}});
      }
      std::vector<TreeNode> next;
      for (auto& p : partial)
        for (auto& o : options) {
          auto t = p;
          t.children.push_back(o);
          next.push_back(std::move(t));
          if (next.size() + out.size() > limit) throw UnsupportedError("enumeration exceeds " + std::to_string(limit) + " trees");
        }
      partial = std::move(next);
    }
    for (auto& p : partial) out.push_back(std::move(p));
  }
}

}  // namespace detail

/// Every derivation of the grammar. With `all_values` every hyperparameter
/// ranges over its grid (continuous domains throw UnsupportedError); otherwise
/// hyperparameters stay at their defaults.
inline std::vector<DerivationTree> enumerate_trees(const Grammar& g, bool all_values = true, std::size_t limit = 100000) {
  std::vector<TreeNode> out;
  detail::enumerate_node(g, 0, g.max_depth, all_values, limit, out);
  return out;
}

/// Distinct algorithm skeletons (e.g. `CC(base=knn)`), sorted.
inline std::vector<std::string> list_skeletons(const Grammar& g) {
  std::set<std::string> out;
  for (auto& t : enumerate_trees(g, false)) out.insert(format_skeleton(map_to_expression(t, g)));
  return {out.begin(), out.end()};
}

// --- species ----------------------------------------------------------------

/// Hyperparameter kinds free to evolve in species 1..8; algorithm choices are
/// always free.
inline bool species_allows(int species, TerminalKind kind) {
  if (species < 1 || species > 8) throw std::invalid_argument("species must lie in 1..8, got " + std::to_string(species));
  const bool cat = kind == TerminalKind::categorical, in = kind == TerminalKind::integer, re = kind == TerminalKind::real;
  switch (species) {
    case 1: return kind == TerminalKind::algorithm;
    case 2: return !in && !re;
    case 3: return !cat && !re;
    case 4: return !cat && !in;
    case 5: return !re;
    case 6: return !in;
    case 7: return !cat;
    default: return true;
  }
}

/// Freezes every hyperparameter whose kind the species does not evolve into a
/// `name=default` literal. Species 8 returns the grammar unchanged.
inline Grammar species_grammar(const Grammar& base, int species) {
  Grammar g = base;
  for (auto& p : g.productions)
    for (auto& alt : p.alternatives)
      for (auto& s : alt)
        if (s.type == Symbol::Type::hyperparameter && !species_allows(species, s.hp.kind)) {
          Symbol lit;
          lit.type = Symbol::Type::literal;
          lit.text = s.hp.name + "=" + s.hp.default_value;
          s = std::move(lit);
        }
  g.finalize();
  return g;
}

namespace detail {

inline void conform_node(TreeNode& n, const Grammar& g) {
  const auto& alt = g.at(n.symbol).alternatives.at(static_cast<std::size_t>(n.alt));
  for (std::size_t i = 0; i < alt.size() && i < n.children.size(); ++i) {
    const auto& s = alt[i];
    auto& c = n.children[i];
    if (s.type == Symbol::Type::nonterminal) {
      conform_node(c, g);
    } else if (s.type == Symbol::Type::hyperparameter) {
      if (s.hp.contains(c.value)) continue;
      auto eq = c.value.find('=');
      auto v = eq == std::string::npos ? std::string{} : c.value.substr(eq + 1);
      c.value = s.hp.contains(v) ? s.hp.canonical(v) : s.hp.default_value;
    } else {
      c.value = s.text;
    }
  }
}

}  // namespace detail

/// Re-reads a tree against a grammar with the same shape but different
/// frozen hyperparameters (another species of the same base grammar):
/// frozen slots reset to their literal default, free slots take the carried
/// value when it lies in the domain.
inline DerivationTree conform(DerivationTree tree, const Grammar& g) {
  detail::conform_node(tree, g);
  return tree;
}

}  // namespace automlc
