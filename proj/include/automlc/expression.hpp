#pragma once

#include <cctype>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "automlc/core/errors.hpp"
#include "automlc/core/text.hpp"

namespace automlc {

/// One algorithm in a configuration expression: `name(key=value, ..., base=inner)`.
/// Hyperparameter values are kept as text; `inner` holds at most one node.
struct ExprNode {
  std::string name;
  std::map<std::string, std::string> params;
  std::vector<ExprNode> inner;

  bool has_base() const noexcept { return !inner.empty(); }
  const ExprNode& base() const { return inner.at(0); }
  ExprNode& base() { return inner.at(0); }

  friend bool operator==(const ExprNode&, const ExprNode&) = default;
};

/// Canonical text: keys in lexicographic order, `base=` last, ", " separators,
/// bare name when there is nothing to put in parentheses.
inline std::string format_expression(const ExprNode& node) {
  std::string out = node.name;
  if (node.params.empty() && node.inner.empty()) return out;
  out += '(';
  bool first = true;
  for (const auto& [k, v] : node.params) {
    if (!first) out += ", ";
    out += k + "=" + v;
    first = false;
  }
  if (node.has_base()) {
    if (!first) out += ", ";
    out += "base=" + format_expression(node.base());
  }
  out += ')';
  return out;
}

/// Algorithm names only, e.g. `CC(base=gaussian-nb)`.
inline std::string format_skeleton(const ExprNode& node) {
  if (!node.has_base()) return node.name;
  return node.name + "(base=" + format_skeleton(node.base()) + ")";
}

namespace detail {

class ExprParser {
 public:
  explicit ExprParser(std::string_view s) : s_(s) {}

  ExprNode parse() {
    auto node = parse_node();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing characters");
    return node;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw ParseError("configuration expression: " + why + " at offset " + std::to_string(pos_) + " in '" +
                     std::string(s_) + "'");
  }
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  static bool name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.' || c == '+';
  }
  std::string parse_name() {
    skip_ws();
    auto start = pos_;
    while (pos_ < s_.size() && name_char(s_[pos_])) ++pos_;
    if (pos_ == start) fail("expected a name");
    return std::string(s_.substr(start, pos_ - start));
  }
  std::string parse_value() {
    skip_ws();
    auto start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ')' && s_[pos_] != '(') ++pos_;
    auto v = text::trim(s_.substr(start, pos_ - start));
    if (v.empty()) fail("empty value");
    return std::string(v);
  }
  ExprNode parse_node() {
    ExprNode node;
    node.name = parse_name();
    skip_ws();
    if (pos_ >= s_.size() || s_[pos_] != '(') return node;
    ++pos_;
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == ')') {
      ++pos_;
      return node;
    }
    while (true) {
      auto key = parse_name();
      skip_ws();
      if (pos_ >= s_.size() || s_[pos_] != '=') fail("expected '='");
      ++pos_;
      if (key == "base") {
        if (node.has_base()) fail("duplicate base");
        node.inner.push_back(parse_node());
      } else {
        if (node.params.count(key)) fail("duplicate key '" + key + "'");
        node.params[key] = parse_value();
      }
      skip_ws();
      if (pos_ >= s_.size()) fail("unterminated argument list");
      if (s_[pos_] == ')') {
        ++pos_;
        return node;
      }
      if (s_[pos_] != ',') fail("expected ',' or ')'");
      ++pos_;
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline ExprNode parse_expression(std::string_view s) { return detail::ExprParser(s).parse(); }

}  // namespace automlc
