#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gasnet/conic.hpp"
#include "gasnet/network.hpp"

namespace gasnet {

/// Deterministic operating point, one vector per stage.
struct StationaryPoint {
  std::vector<Eigen::VectorXd> flow;        // midway flow, E
  std::vector<Eigen::VectorXd> pressure;    // N
  std::vector<Eigen::VectorXd> regulation;  // E
  std::vector<Eigen::VectorXd> flow_plus;   // inlet, E
  std::vector<Eigen::VectorXd> flow_minus;  // outlet, E
  std::vector<Eigen::VectorXd> linepack;    // E
  std::vector<Eigen::VectorXd> injection;   // N
  std::vector<int> closed_edges;            // edges decoupled by an activated binary valve
  int iterations = 0;
  double weymouth_residual = 0.0;

  int horizon() const { return static_cast<int>(flow.size()); }
};

/// Linearized flow map per stage: phi = w0 + W1 rho + W2 kappa.
struct Sensitivities {
  std::vector<Eigen::VectorXd> w0;
  std::vector<Eigen::MatrixXd> W1;  // E x N
  std::vector<Eigen::MatrixXd> W2;  // E x E

  int horizon() const { return static_cast<int>(w0.size()); }
};

struct LinearizeOptions {
  /// Lower bound on 2|phi| in the flow Jacobian; zero disables the floor and
  /// makes stagnant edges an error.
  double flow_floor = 1e-6;
  std::vector<int> closed_edges;
};

/// Weymouth flow phi(rho_n, rho_m, kappa) = sign(g) sqrt(|g|) with
/// g = w ((rho_n + kappa)^2 - rho_m^2).
double weymouth_flow(double w, double rho_n, double rho_m, double kappa);

/// phi|phi| - w ((rho_n + kappa)^2 - rho_m^2) scaled by max(1, w (rho_n + kappa)^2).
double weymouth_relative_residual(double w, double phi, double rho_n, double rho_m, double kappa);

/// Largest relative Weymouth residual over stages and open edges.
double max_weymouth_residual(const GasNetwork& network, const StationaryPoint& point);

/// Sensitivities of one stage at (phi, rho, kappa).
void linearize_stage(const GasNetwork& network, const Eigen::VectorXd& flow,
                     const Eigen::VectorXd& pressure, const Eigen::VectorXd& regulation,
                     const LinearizeOptions& options, Eigen::VectorXd& w0, Eigen::MatrixXd& W1,
                     Eigen::MatrixXd& W2);

/// Throws SingularJacobianError naming the edge when a stagnant edge meets a
/// disabled floor.
Sensitivities linearize(const GasNetwork& network, const StationaryPoint& point,
                        const LinearizeOptions& options = {});

struct StationaryOptions {
  int max_iterations = 50;
  double tolerance = 1e-8;
  /// Weight of the min ||kappa||^2 tie-break relative to the cost scale.
  double regulation_tiebreak = 1e-7;
  double flow_floor = 1e-6;
  std::vector<int> closed_edges;
  SolverSettings solver;
};

/// Cost-minimal deterministic operating point over all stages by sequential
/// linearization: linearize, solve the deterministic program, step, repeat;
/// a Newton pass on the square network equations finishes the solve.
/// Throws ConvergenceError or InfeasibleError.
StationaryPoint solve_stationary(const GasNetwork& network, const IncidenceSet& incidence,
                                 const std::vector<Eigen::VectorXd>& mean_extractions,
                                 const std::vector<double>& reference_pressures,
                                 const StationaryOptions& options = {});

/// Reference pressure of every stage.
std::vector<double> reference_pressures(const GasNetwork& network, const StationaryPoint& point);

}  // namespace gasnet
