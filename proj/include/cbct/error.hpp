#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace cbct {

enum class ErrorKind {
  Config,
  Format,
  Bounds,
  Io,
  Geometry,
  Unsupported,
  InsufficientViews,
  Assembly,
  UndefinedReference,
  Solver,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Iterative solver gave up; carries the last iterate so callers can inspect it.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, std::vector<double> iterate);
  const std::vector<double>& iterate() const noexcept { return iterate_; }

 private:
  std::vector<double> iterate_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace cbct
