#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gasnet/io.hpp"

namespace gasnet {

enum class RunMode { steady_state, optimize, validate, frontier, topology };

const char* to_string(RunMode mode);
RunMode run_mode_from_string(const std::string& s);

struct RunConfig {
  RunMode mode = RunMode::optimize;
  std::filesystem::path network;
  std::filesystem::path uncertainty;
  std::filesystem::path demand;
  std::filesystem::path policy;  // validate: evaluate this file instead of solving
  std::filesystem::path output;  // file for steady-state, directory otherwise

  ControlOptions controls;
  DoubleSidedMode double_sided = DoubleSidedMode::exact;
  std::string solver;  // empty: GASNET_SOLVER or the built-in solver
  SolverSettings settings;

  int samples = 1000;
  std::uint64_t seed = 1;
  std::string distribution = "gaussian";
  bool deterministic = false;  // validate: also evaluate the recourse-free plan
  std::vector<double> alpha_rho{0.0, 10.0, 50.0, 100.0};
  int threads = 0;

  /// Throws ConfigError when a required file is missing for the mode or a
  /// numeric field is out of range.
  void check() const;
  /// Canonical description with file contents replaced by their digests.
  json canonical() const;
};

std::string sha256_hex(const std::string& data);

/// SHA-256 of the canonical configuration. Output locations and thread
/// counts do not enter the hash.
std::string config_hash(const RunConfig& config);

/// Network, linearization and uncertainty ready for assembly.
struct Instance {
  GasNetwork network;
  IncidenceSet incidence;
  UncertaintyModel model;
  std::vector<double> reference_pressures;
  StationaryPoint point;
  Sensitivities sens;
};

/// Validates the network, computes the stationary point at the mean
/// extractions of `model` and linearizes around it. Reference pressures
/// default to the midpoint of the reference node's bounds.
Instance prepare_instance(GasNetwork network, UncertaintyModel model,
                          std::optional<std::vector<double>> reference_pressures = std::nullopt,
                          const StationaryOptions& options = {});

Instance load_instance(const RunConfig& config);

struct PlanResult {
  PolicySet policy;
  Solution solution;
  AssembledProgram program;
};

/// Stochastic program for the instance.
PlanResult solve_policy(const Instance& inst, const AssembleOptions& options,
                        const ConicSolver& solver, const SolverSettings& settings = {});

/// Recourse-free program at the mean extractions; one column per stage.
PlanResult solve_deterministic_plan(const Instance& inst, const ConicSolver& solver,
                                    const SolverSettings& settings = {});

/// Executes one mode and writes its artifacts. Returns the process exit
/// status; on failure an error JSON goes to `out` and, when possible, to
/// error.json next to the outputs.
int run(const RunConfig& config, std::ostream& out, std::ostream& log);

}  // namespace gasnet
