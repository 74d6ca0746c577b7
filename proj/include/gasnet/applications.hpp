#pragma once

#include <string>
#include <vector>

#include "gasnet/conic.hpp"
#include "gasnet/controls.hpp"
#include "gasnet/ldr_program.hpp"
#include "gasnet/steady_state.hpp"

namespace gasnet {

/// ||R_t Theta_tn|| <= alpha Theta_tn mu^t for every node and stage. Rows
/// pinned to zero are skipped; alpha = 0 zeroes every recourse column.
void injection_deviation_cap(ProgramBuilder& builder, const ProgramIndex& index,
                             const GasNetwork& network, const UncertaintyModel& model,
                             double alpha);

/// ||R_t Psi_tl|| <= alpha Psi_tl mu^t for every edge that stores gas.
void linepack_cap(ProgramBuilder& builder, const ProgramIndex& index, const GasNetwork& network,
                  const UncertaintyModel& model, double alpha);

/// alpha * sum_{t>=2} Tr[(P_t - P_{t-1}) Sigma (P_t - P_{t-1})^T] added to the
/// objective through one square epigraph per node and stage.
void variability_penalty(ProgramBuilder& builder, const ProgramIndex& index,
                         const GasNetwork& network, const UncertaintyModel& model, double alpha);

/// The trace expression itself (without alpha) for a decoded policy.
double variability_value(const PolicySet& policy, const UncertaintyModel& model);

struct TopologyConfig {
  int id = 0;
  std::vector<bool> valves;       // true = valve activated, edge decoupled
  std::vector<int> closed_edges;
  bool feasible = false;
  std::string failure;
  StationaryPoint point;
  Sensitivities sens;
  std::vector<double> reference_pressures;

  int activated() const;
  /// One character per valve, '1' when activated.
  std::string bits() const;
};

struct TopologyCatalog {
  std::vector<int> valve_edges;
  std::vector<TopologyConfig> configs;
};

/// One configuration per subset of binary valves (V <= 12). Disconnected
/// or failing configurations are kept and marked infeasible.
TopologyCatalog precompute_topologies(const GasNetwork& network, const IncidenceSet& incidence,
                                      const std::vector<Eigen::VectorXd>& mean_extractions,
                                      const std::vector<double>& reference_pressures,
                                      const StationaryOptions& options = {});

struct ConfigOutcome {
  int config_id = 0;
  bool attempted = false;
  SolveStatus status = SolveStatus::iteration_limit;
  double objective = 0.0;
  std::string failure;
};

struct TopologyResult {
  int best = -1;
  PolicySet policy;
  double objective = 0.0;
  Solution solution;
  AssembledProgram program;
  std::vector<ConfigOutcome> outcomes;
};

/// Solves every feasible configuration and returns the cheapest; ties go to
/// fewer activated valves, then to the lower configuration id. Throws
/// InfeasibleError when no configuration solves to optimality.
TopologyResult solve_with_topology(const GasNetwork& network, const IncidenceSet& incidence,
                                   const TopologyCatalog& catalog, const UncertaintyModel& model,
                                   const AssembleOptions& options, const ConicSolver& solver,
                                   const SolverSettings& settings = {});

/// Index of the winning outcome under the tie-break rule; -1 if none is optimal.
int select_topology(const TopologyCatalog& catalog, const std::vector<ConfigOutcome>& outcomes);

struct FrontierRow {
  double alpha_rho = 0.0;
  int config_id = 0;
  std::string valve_bits;
  double expected_cost = 0.0;
  double variability = 0.0;
  bool best = false;
  std::string status;
};

/// Per-configuration solves over a grid of variability penalties. Configuration
/// solves run on up to `threads` workers (0 = hardware concurrency).
std::vector<FrontierRow> frontier(const GasNetwork& network, const IncidenceSet& incidence,
                                  const TopologyCatalog& catalog, const UncertaintyModel& model,
                                  const AssembleOptions& options,
                                  const std::vector<double>& alphas, const ConicSolver& solver,
                                  const SolverSettings& settings = {}, int threads = 0);

}  // namespace gasnet
