#include "gasnet/steady_state.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>

#include "gasnet/errors.hpp"
#include "gasnet/ldr_program.hpp"
#include "gasnet/uncertainty.hpp"

namespace gasnet {

double weymouth_flow(double w, double rho_n, double rho_m, double kappa) {
  const double g = w * ((rho_n + kappa) * (rho_n + kappa) - rho_m * rho_m);
  return g >= 0.0 ? std::sqrt(g) : -std::sqrt(-g);
}

double weymouth_relative_residual(double w, double phi, double rho_n, double rho_m, double kappa) {
  const double up = w * (rho_n + kappa) * (rho_n + kappa);
  const double r = phi * std::abs(phi) - (up - w * rho_m * rho_m);
  return std::abs(r) / std::max(1.0, up);
}

double max_weymouth_residual(const GasNetwork& network, const StationaryPoint& point) {
  double worst = 0.0;
  std::vector<char> closed(network.num_edges(), 0);
  for (int l : point.closed_edges) closed[l] = 1;
  for (int t = 0; t < point.horizon(); ++t)
    for (int l = 0; l < network.num_edges(); ++l) {
      if (closed[l]) continue;
      const auto& p = point.pressure[t];
      worst = std::max(worst, weymouth_relative_residual(
                                  network.edge(l).friction, point.flow[t][l],
                                  p[network.from_index(l)], p[network.to_index(l)],
                                  point.regulation[t][l]));
    }
  return worst;
}

void linearize_stage(const GasNetwork& network, const Eigen::VectorXd& flow,
                     const Eigen::VectorXd& pressure, const Eigen::VectorXd& regulation,
                     const LinearizeOptions& options, Eigen::VectorXd& w0, Eigen::MatrixXd& W1,
                     Eigen::MatrixXd& W2) {
  const int N = network.num_nodes();
  const int E = network.num_edges();
  w0 = Eigen::VectorXd::Zero(E);
  W1 = Eigen::MatrixXd::Zero(E, N);
  W2 = Eigen::MatrixXd::Zero(E, E);
  std::vector<char> closed(E, 0);
  for (int l : options.closed_edges) closed.at(l) = 1;
  for (int l = 0; l < E; ++l) {
    if (closed[l]) continue;
    const int n = network.from_index(l);
    const int m = network.to_index(l);
    const double w = network.edge(l).friction;
    double jphi = 2.0 * std::abs(flow[l]);
    if (options.flow_floor > 0.0) {
      jphi = std::max(jphi, options.flow_floor);
    } else if (jphi == 0.0) {
      const auto& e = network.edge(l);
      throw SingularJacobianError("zero flow on edge (" + e.from + "," + e.to +
                                  ") makes the flow Jacobian singular");
    }
    const double up = pressure[n] + regulation[l];
    W1(l, n) = 2.0 * w * up / jphi;
    W1(l, m) = -2.0 * w * pressure[m] / jphi;
    W2(l, l) = 2.0 * w * up / jphi;
    w0[l] = flow[l] - W1(l, n) * pressure[n] - W1(l, m) * pressure[m] - W2(l, l) * regulation[l];
  }
}

Sensitivities linearize(const GasNetwork& network, const StationaryPoint& point,
                        const LinearizeOptions& options) {
  Sensitivities s;
  LinearizeOptions opt = options;
  if (opt.closed_edges.empty()) opt.closed_edges = point.closed_edges;
  for (int t = 0; t < point.horizon(); ++t) {
    Eigen::VectorXd w0;
    Eigen::MatrixXd W1, W2;
    linearize_stage(network, point.flow[t], point.pressure[t], point.regulation[t], opt, w0, W1, W2);
    s.w0.push_back(std::move(w0));
    s.W1.push_back(std::move(W1));
    s.W2.push_back(std::move(W2));
  }
  return s;
}

std::vector<double> reference_pressures(const GasNetwork& network, const StationaryPoint& point) {
  std::vector<double> out;
  for (int t = 0; t < point.horizon(); ++t) out.push_back(point.pressure[t][network.reference()]);
  return out;
}

namespace {

// Newton on the square network equations with regulation and all injections
// but the reference node's held fixed.
bool newton_polish(const GasNetwork& network, const IncidenceSet& inc,
                   const std::vector<Eigen::VectorXd>& extraction,
                   const std::vector<double>& ref_pressure, const std::vector<char>& closed,
                   double floor, StationaryPoint& pt) {
  const int N = network.num_nodes();
  const int E = network.num_edges();
  const int T = pt.horizon();
  const int r = network.reference();
  const int per = 4 * E + N;
  const int size = T * per;
  std::vector<int> pvar(N, -1);
  for (int n = 0, k = 0; n < N; ++n)
    if (n != r) pvar[n] = 4 * E + k++;
  const int theta_r = 4 * E + N - 1;
  const Eigen::VectorXd s = network.linepack_factor();
  const Eigen::VectorXd psi0 = network.initial_linepack();

  Eigen::VectorXd z(size);
  for (int t = 0; t < T; ++t) {
    const int o = t * per;
    z.segment(o, E) = pt.flow[t];
    z.segment(o + E, E) = pt.flow_plus[t];
    z.segment(o + 2 * E, E) = pt.flow_minus[t];
    z.segment(o + 3 * E, E) = pt.linepack[t];
    for (int n = 0; n < N; ++n)
      if (n != r) z[o + pvar[n]] = pt.pressure[t][n];
    z[o + theta_r] = pt.injection[t][r];
  }

  auto pressure_of = [&](const Eigen::VectorXd& v, int t, int n) {
    return n == r ? ref_pressure[t] : v[t * per + pvar[n]];
  };

  auto residual = [&](const Eigen::VectorXd& v, Eigen::VectorXd& F,
                      std::vector<Eigen::Triplet<double>>* J) {
    F.setZero(size);
    for (int t = 0; t < T; ++t) {
      const int o = t * per;
      const auto& kap = pt.regulation[t];
      int row = o;
      for (int n = 0; n < N; ++n, ++row) {
        double f = extraction[t][n] - (n == r ? v[o + theta_r] : pt.injection[t][n]);
        if (n == r && J) J->emplace_back(row, o + theta_r, -1.0);
        for (int l = 0; l < E; ++l) {
          if (inc.A_plus(n, l) != 0.0) {
            f += inc.A_plus(n, l) * v[o + E + l];
            if (J) J->emplace_back(row, o + E + l, inc.A_plus(n, l));
          }
          if (inc.A_minus(n, l) != 0.0) {
            f += inc.A_minus(n, l) * v[o + 2 * E + l];
            if (J) J->emplace_back(row, o + 2 * E + l, inc.A_minus(n, l));
          }
          f += inc.B(n, l) * kap[l];
        }
        F[row] = f;
      }
      for (int l = 0; l < E; ++l, ++row) {
        const double phi = v[o + l];
        if (closed[l]) {
          F[row] = phi;
          if (J) J->emplace_back(row, o + l, 1.0);
          continue;
        }
        const int n = network.from_index(l);
        const int m = network.to_index(l);
        const double w = network.edge(l).friction;
        const double pn = pressure_of(v, t, n);
        const double pm = pressure_of(v, t, m);
        const double up = pn + kap[l];
        F[row] = phi * std::abs(phi) - w * (up * up - pm * pm);
        if (J) {
          J->emplace_back(row, o + l, std::max(2.0 * std::abs(phi), floor));
          if (n != r) J->emplace_back(row, o + pvar[n], -2.0 * w * up);
          if (m != r) J->emplace_back(row, o + pvar[m], 2.0 * w * pm);
        }
      }
      for (int l = 0; l < E; ++l, ++row) {
        F[row] = v[o + l] - 0.5 * (v[o + E + l] + v[o + 2 * E + l]);
        if (J) {
          J->emplace_back(row, o + l, 1.0);
          J->emplace_back(row, o + E + l, -0.5);
          J->emplace_back(row, o + 2 * E + l, -0.5);
        }
      }
      for (int l = 0; l < E; ++l, ++row) {
        const int n = network.from_index(l);
        const int m = network.to_index(l);
        F[row] = v[o + 3 * E + l] -
                 0.5 * s[l] * (pressure_of(v, t, n) + kap[l] + pressure_of(v, t, m));
        if (J) {
          J->emplace_back(row, o + 3 * E + l, 1.0);
          if (n != r) J->emplace_back(row, o + pvar[n], -0.5 * s[l]);
          if (m != r) J->emplace_back(row, o + pvar[m], -0.5 * s[l]);
        }
      }
      for (int l = 0; l < E; ++l, ++row) {
        const double prev = t == 0 ? psi0[l] : v[o - per + 3 * E + l];
        F[row] = v[o + 3 * E + l] - prev - v[o + E + l] + v[o + 2 * E + l];
        if (J) {
          J->emplace_back(row, o + 3 * E + l, 1.0);
          if (t > 0) J->emplace_back(row, o - per + 3 * E + l, -1.0);
          J->emplace_back(row, o + E + l, -1.0);
          J->emplace_back(row, o + 2 * E + l, 1.0);
        }
      }
    }
  };

  Eigen::VectorXd F;
  residual(z, F, nullptr);
  double norm = F.lpNorm<Eigen::Infinity>();
  for (int it = 0; it < 30 && norm > 1e-13; ++it) {
    std::vector<Eigen::Triplet<double>> trips;
    residual(z, F, &trips);
    Eigen::SparseMatrix<double> J(size, size);
    J.setFromTriplets(trips.begin(), trips.end());
    J.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(J);
    if (lu.info() != Eigen::Success) return false;
    const Eigen::VectorXd dz = lu.solve(-F);
    if (!dz.allFinite()) return false;
    double step = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 20; ++ls, step *= 0.5) {
      Eigen::VectorXd trial = z + step * dz;
      Eigen::VectorXd Ft;
      residual(trial, Ft, nullptr);
      const double tn = Ft.lpNorm<Eigen::Infinity>();
      if (tn < norm) {
        z = trial;
        norm = tn;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }

  for (int t = 0; t < T; ++t) {
    const int o = t * per;
    pt.flow[t] = z.segment(o, E);
    pt.flow_plus[t] = z.segment(o + E, E);
    pt.flow_minus[t] = z.segment(o + 2 * E, E);
    pt.linepack[t] = z.segment(o + 3 * E, E);
    for (int n = 0; n < N; ++n) pt.pressure[t][n] = pressure_of(z, t, n);
    pt.injection[t][r] = z[o + theta_r];
  }
  return true;
}

}  // namespace

StationaryPoint solve_stationary(const GasNetwork& network, const IncidenceSet& incidence,
                                 const std::vector<Eigen::VectorXd>& mean_extractions,
                                 const std::vector<double>& reference_pressures,
                                 const StationaryOptions& options) {
  const int N = network.num_nodes();
  const int E = network.num_edges();
  const int T = static_cast<int>(mean_extractions.size());
  const int r = network.reference();
  if (r < 0) throw TopologyError("network has no reference node");
  if (T == 0) throw DimensionError("solve_stationary: no stages");
  if (static_cast<int>(reference_pressures.size()) != T)
    throw DimensionError("solve_stationary: expected one reference pressure per stage");
  for (int t = 0; t < T; ++t)
    if (mean_extractions[t].size() != N)
      throw DimensionError("solve_stationary: extraction at stage " + std::to_string(t) +
                           " has " + std::to_string(mean_extractions[t].size()) + " entries");
  std::vector<char> closed(E, 0);
  for (int l : options.closed_edges) closed.at(l) = 1;
  if (!is_connected(network, options.closed_edges))
    throw TopologyError("network is disconnected; the pressure profile is not pinned");

  StationaryPoint pt;
  pt.closed_edges = options.closed_edges;

  // Initial point: flat pressures, midpoint regulation, least-squares flows
  // with the reference node supplying the balance.
  Eigen::MatrixXd Aopen = incidence.A;
  for (int l = 0; l < E; ++l)
    if (closed[l]) Aopen.col(l).setZero();
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Aopen);
  for (int t = 0; t < T; ++t) {
    Eigen::VectorXd kap = Eigen::VectorXd::Zero(E);
    for (int l = 0; l < E; ++l) {
      const auto& e = network.edge(l);
      if (e.active()) kap[l] = 0.5 * (e.regulation_min + e.regulation_max);
    }
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(N);
    for (int n = 0; n < N; ++n) {
      const auto& node = network.node(n);
      theta[n] = std::clamp(0.0, node.injection_min, node.injection_max);
    }
    theta[r] += mean_extractions[t].sum() - theta.sum() + (incidence.B * kap).sum();
    Eigen::VectorXd phi = cod.solve(Eigen::VectorXd(theta - incidence.B * kap - mean_extractions[t]));
    pt.flow.push_back(phi);
    pt.pressure.push_back(Eigen::VectorXd::Constant(N, reference_pressures[t]));
    pt.regulation.push_back(kap);
  }

  const ObjectiveTerms costs = [&] {
    ObjectiveTerms o;
    o.c1 = network.cost_linear();
    o.c2 = network.cost_quadratic();
    return o;
  }();
  const double cost_scale =
      std::max({1.0, costs.c1.cwiseAbs().maxCoeff(), costs.c2.cwiseAbs().maxCoeff()});

  const UncertaintyModel model = UncertaintyModel::deterministic(mean_extractions);
  auto solver = make_solver();
  AssembleOptions aopt;
  aopt.closed_edges = options.closed_edges;
  aopt.regulation_tiebreak = options.regulation_tiebreak * cost_scale;
  LinearizeOptions lopt;
  lopt.flow_floor = options.flow_floor;
  lopt.closed_edges = options.closed_edges;

  auto weymouth_residual = [&](const std::vector<Eigen::VectorXd>& phi,
                               const std::vector<Eigen::VectorXd>& rho,
                               const std::vector<Eigen::VectorXd>& kap) {
    double worst = 0.0;
    for (int t = 0; t < T; ++t)
      for (int l = 0; l < E; ++l) {
        if (closed[l]) continue;
        worst = std::max(worst, weymouth_relative_residual(
                                    network.edge(l).friction, phi[t][l],
                                    rho[t][network.from_index(l)], rho[t][network.to_index(l)],
                                    kap[t][l]));
      }
    return worst;
  };

  double res = weymouth_residual(pt.flow, pt.pressure, pt.regulation);
  int it = 0;
  PolicySet last;
  bool have_policy = false;
  double step = 1.0;
  double prev_change = std::numeric_limits<double>::infinity();
  for (; it < options.max_iterations; ++it) {
    Sensitivities sens;
    for (int t = 0; t < T; ++t) {
      Eigen::VectorXd w0;
      Eigen::MatrixXd W1, W2;
      LinearizeOptions lstage = lopt;
      lstage.flow_floor = std::max(lopt.flow_floor, 1e-3 * pt.flow[t].lpNorm<Eigen::Infinity>());
      linearize_stage(network, pt.flow[t], pt.pressure[t], pt.regulation[t], lstage, w0, W1, W2);
      // Newton step on the implicit map: shift by -F/J away from the curve
      for (int l = 0; l < E; ++l) {
        if (closed[l]) continue;
        const auto& e = network.edge(l);
        const double phi = pt.flow[t][l];
        const double up = pt.pressure[t][network.from_index(l)] + pt.regulation[t][l];
        const double down = pt.pressure[t][network.to_index(l)];
        const double F = phi * std::abs(phi) - e.friction * (up * up - down * down);
        w0[l] -= F / std::max(2.0 * std::abs(phi), lstage.flow_floor);
      }
      sens.w0.push_back(w0);
      sens.W1.push_back(W1);
      sens.W2.push_back(W2);
    }
    const AssembledProgram prog = assemble(network, incidence, sens, model, reference_pressures, aopt);
    const Solution sol = solver->solve(prog.program, options.solver);
    if (sol.status == SolveStatus::primal_infeasible)
      throw InfeasibleError("deterministic network program is infeasible at linearization " +
                            std::to_string(it));
    // the iterate only needs a near-feasible primal point; stalled duals are tolerated
    const bool usable = sol.status == SolveStatus::optimal ||
                        (sol.status == SolveStatus::iteration_limit &&
                         sol.x.size() == prog.program.A.cols() &&
                         sol.primal_residual <= 1e-6 * (1.0 + prog.program.b.norm()));
    if (!usable)
      throw ConvergenceError("deterministic network program ended with status " +
                                 std::string(to_string(sol.status)),
                             res);
    last = decode_policy(prog.index, sol.x, T);
    have_policy = true;
    double change = 0.0;
    for (int t = 0; t < T; ++t)
      change = std::max(change, (last.pressure[t].col(0) - pt.pressure[t]).lpNorm<Eigen::Infinity>());
    // halve the step whenever the proposed move stops shrinking (vertex cycling)
    if (it > 0 && change > 0.9 * prev_change) step = std::max(0.5 * step, 1.0 / 64.0);
    prev_change = change;
    for (int t = 0; t < T; ++t) {
      pt.flow[t] += step * (last.flow[t].col(0) - pt.flow[t]);
      pt.pressure[t] += step * (last.pressure[t].col(0) - pt.pressure[t]);
      pt.regulation[t] += step * (last.regulation[t].col(0) - pt.regulation[t]);
    }
    res = weymouth_residual(pt.flow, pt.pressure, pt.regulation);
    if (res <= 1e-6 && change <= 1e-6) {
      ++it;
      break;
    }
  }
  if (!have_policy) throw ConvergenceError("no linearization solved", res);

  for (int t = 0; t < T; ++t) {
    pt.flow_plus.push_back(last.flow_plus[t].col(0));
    pt.flow_minus.push_back(last.flow_minus[t].col(0));
    pt.linepack.push_back(last.linepack[t].col(0));
    pt.injection.push_back(last.injection[t].col(0));
  }
  newton_polish(network, incidence, mean_extractions, reference_pressures, closed,
                options.flow_floor, pt);
  pt.iterations = it;
  pt.weymouth_residual = max_weymouth_residual(network, pt);
  if (!(pt.weymouth_residual <= options.tolerance))
    throw ConvergenceError("stationary solve stopped after " + std::to_string(it) +
                               " linearizations with Weymouth residual " +
                               std::to_string(pt.weymouth_residual),
                           pt.weymouth_residual);
  return pt;
}

}  // namespace gasnet
