#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "gasnet/ldr_program.hpp"
#include "gasnet/network.hpp"
#include "gasnet/steady_state.hpp"
#include "gasnet/uncertainty.hpp"

namespace gasnet {

/// Realized state of one sample, one vector per stage.
struct Trajectory {
  std::vector<Eigen::VectorXd> injection, regulation, pressure, linepack, flow, flow_plus,
      flow_minus;
};

/// Every stage quantity equals its coefficient matrix times the leading
/// columns of zeta. Throws DimensionError when zeta is too short.
Trajectory realize(const PolicySet& policy, const Eigen::VectorXd& zeta);

/// Largest absolute residual per equation family of a realized trajectory.
struct EqualityResiduals {
  double mass_balance = 0.0;
  double weymouth = 0.0;
  double reference = 0.0;
  double midway = 0.0;
  double linepack = 0.0;
  double dynamics = 0.0;

  double max() const;
};

EqualityResiduals equality_residuals(const Trajectory& traj, const Eigen::VectorXd& zeta,
                                     const GasNetwork& network, const IncidenceSet& incidence,
                                     const Sensitivities& sens, const UncertaintyModel& model,
                                     const std::vector<double>& reference_pressures,
                                     bool skip_reference_balance = false);

/// Full-width policy for a recourse-free plan: injections and regulation
/// keep the plan's values for every outcome, while flows, pressures and
/// linepack follow the linearized network equations with the reference node
/// balance left open. `plan` has one column per stage.
PolicySet deterministic_response(const PolicySet& plan, const GasNetwork& network,
                                 const IncidenceSet& incidence, const Sensitivities& sens,
                                 const UncertaintyModel& model,
                                 const std::vector<int>& closed_edges = {});

struct FrequencyEntry {
  std::string family;  // flow_min, terminal_linepack, injection, regulation, pressure
  int index = 0;
  int stage = 0;
  double frequency = 0.0;
};

/// Per-constraint empirical violation frequencies over the sample rows.
std::vector<FrequencyEntry> empirical_risk(const PolicySet& policy, const GasNetwork& network,
                                           const Eigen::MatrixXd& samples,
                                           const std::vector<int>& closed_edges = {});

struct ValidationReport {
  int samples = 0;
  double expected_cost = 0.0;
  double pressure_violation_expected = 0.0;  // MPa, summed over stages and nodes
  double pressure_violation_worst = 0.0;
  double mass_violation_expected = 0.0;      // mass-balance residual norm summed over stages
  double mass_violation_worst = 0.0;
  double first_stage_injection = 0.0;
  double compressor_deployment = 0.0;        // kPa, signed sum of E[kappa]
  double valve_deployment = 0.0;             // kPa
  double compressor_deployment_abs = 0.0;    // kPa, sum of E|kappa|
  double valve_deployment_abs = 0.0;
  double variability = 0.0;
  double max_violation_frequency = 0.0;
  double max_injection_std_ratio = 0.0;
  double max_equality_residual = 0.0;
  std::vector<FrequencyEntry> frequencies;
};

/// Monte Carlo metrics of `policy` over the rows of `samples`. With
/// `deterministic` set, the policy is a one-column plan evaluated through
/// deterministic_response. Throws ConfigError for an empty sample set.
ValidationReport evaluate(const PolicySet& policy, const GasNetwork& network,
                          const IncidenceSet& incidence, const Sensitivities& sens,
                          const UncertaintyModel& model,
                          const std::vector<double>& reference_pressures,
                          const Eigen::MatrixXd& samples, bool deterministic,
                          const std::vector<int>& closed_edges = {});

/// Mean of the largest 5% of the values (at least one).
double tail_mean(std::vector<double> values, double fraction = 0.05);

struct ScenarioRow {
  int stage = 0;
  int sample = 0;
  double renewable = 0.0;
  double extraction = 0.0;
  double pressure = 0.0;
  double regulation_abs = 0.0;
};

std::vector<ScenarioRow> scenario_rows(const PolicySet& policy, const UncertaintyModel& model,
                                       const Eigen::MatrixXd& samples);

}  // namespace gasnet
