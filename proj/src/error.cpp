#include "cbct/error.hpp"

namespace cbct {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return "config error";
    case ErrorKind::Format: return "format error";
    case ErrorKind::Bounds: return "bounds error";
    case ErrorKind::Io: return "I/O error";
    case ErrorKind::Geometry: return "geometry error";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::InsufficientViews: return "insufficient views";
    case ErrorKind::Assembly: return "assembly error";
    case ErrorKind::UndefinedReference: return "undefined reference";
    case ErrorKind::Solver: return "solver failure";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

SolverError::SolverError(const std::string& what, std::vector<double> iterate)
    : Error(ErrorKind::Solver, what), iterate_(std::move(iterate)) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace cbct
