#ifndef BETHE_ADMM_ERRORS_HPP
#define BETHE_ADMM_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bethe {

/// Base for every error raised by the library.
class error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Shapes disagree: wrong table length, label out of range, missing node.
class dimension_error : public error {
public:
  using error::error;
};

/// A subgraph that was supposed to be a tree is not one.
class tree_error : public error {
public:
  using error::error;
};

/// A decomposition does not cover the graph.
class cover_error : public error {
public:
  using error::error;
};

/// Enumeration would exceed the state-space guard.
class guard_error : public error {
public:
  using error::error;
};

/// Malformed input file. Carries the 1-based line where parsing stopped.
class parse_error : public error {
public:
  parse_error(std::size_t line, const std::string& what)
  : error("line " + std::to_string(line) + ": " + what)
  , line_(line)
  {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

} // namespace bethe

#endif
