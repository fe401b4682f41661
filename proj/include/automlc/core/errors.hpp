#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace automlc {

/// Malformed input text (dataset, grammar, expression, config file).
/// Carries a 1-based line number when one is known (0 otherwise).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A candidate ran out of its time slice or exceeded the model-size proxy.
class BudgetExceeded : public std::runtime_error {
 public:
  enum class Reason { time, model_size };

  BudgetExceeded(Reason reason, const std::string& what) : std::runtime_error(what), reason_(reason) {}

  Reason reason() const noexcept { return reason_; }

 private:
  Reason reason_;
};

class UnsupportedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace automlc
