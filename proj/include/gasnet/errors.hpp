#pragma once

#include <stdexcept>
#include <string>

namespace gasnet {

/// Base class for every error raised by the library. `kind()` is a short
/// machine-readable tag that the CLI copies into its error JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

struct TopologyError : Error {
  explicit TopologyError(const std::string& w) : Error("topology", w) {}
};

struct DimensionError : Error {
  explicit DimensionError(const std::string& w) : Error("dimension", w) {}
};

struct ConvergenceError : Error {
  ConvergenceError(const std::string& w, double residual)
      : Error("convergence", w), last_residual(residual) {}
  double last_residual;
};

struct InfeasibleError : Error {
  explicit InfeasibleError(const std::string& w) : Error("infeasible", w) {}
};

struct DecompositionError : Error {
  explicit DecompositionError(const std::string& w) : Error("decomposition", w) {}
};

struct SingularJacobianError : Error {
  explicit SingularJacobianError(const std::string& w) : Error("singular_jacobian", w) {}
};

struct NumericalError : Error {
  explicit NumericalError(const std::string& w) : Error("numerical", w) {}
};

struct ParseError : Error {
  explicit ParseError(const std::string& w) : Error("parse", w) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error("config", w) {}
};

}  // namespace gasnet
