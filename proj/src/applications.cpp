#include "gasnet/applications.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "gasnet/errors.hpp"

namespace gasnet {

void ControlOptions::check() const {
  if (injection_cap && !(*injection_cap >= 0.0))
    throw ConfigError("injection_cap must be nonnegative");
  if (linepack_cap && !(*linepack_cap >= 0.0)) throw ConfigError("linepack_cap must be nonnegative");
  if (!(variability_penalty >= 0.0)) throw ConfigError("variability_penalty must be nonnegative");
}

namespace {

LinExpr mean_of(const UncertaintyModel& model, const ProgramIndex& index, PolicyMatrix m, int t,
                int row, double scale) {
  const Eigen::VectorXd mu = model.mean_prefix(t);
  LinExpr e;
  for (int j = 0; j < mu.size(); ++j)
    if (mu[j] != 0.0) e.add(index.var(m, t, row, j), scale * mu[j]);
  return e;
}

void std_cap(ProgramBuilder& builder, ProgramIndex& index, const UncertaintyModel& model,
             PolicyMatrix m, int t, int row, double alpha, const char* family) {
  if (alpha == 0.0) {
    for (int j = 1; j < model.cumulative(t); ++j) {
      LinExpr e;
      e.add(index.var(m, t, row, j), 1.0);
      builder.add_equality(e, 0.0);
    }
    return;
  }
  const auto dev = deviation_rows(model, t, index, m, row);
  const LinExpr head = mean_of(model, index, m, t, row, alpha);
  ConstraintRecord rec;
  rec.family = family;
  rec.stage = t;
  rec.index = row;
  if (dev.empty()) {
    rec.first_variable = builder.add_nonnegative(head);
    rec.cone = ConeType::nonnegative;
  } else {
    rec.first_variable = builder.add_second_order(head, dev);
    rec.cone = ConeType::second_order;
  }
  index.constraints.push_back(rec);
}

}  // namespace

void injection_deviation_cap(ProgramBuilder& builder, const ProgramIndex& index,
                             const GasNetwork& network, const UncertaintyModel& model,
                             double alpha) {
  if (!(alpha >= 0.0)) throw ConfigError("injection cap must be nonnegative");
  auto& idx = const_cast<ProgramIndex&>(index);
  for (int t = 0; t < model.horizon(); ++t)
    for (int n = 0; n < network.num_nodes(); ++n) {
      const auto& node = network.node(n);
      if (node.injection_max - node.injection_min <= 1e-12) continue;
      std_cap(builder, idx, model, PolicyMatrix::injection, t, n, alpha, "injection_cap");
    }
}

void linepack_cap(ProgramBuilder& builder, const ProgramIndex& index, const GasNetwork& network,
                  const UncertaintyModel& model, double alpha) {
  if (!(alpha >= 0.0)) throw ConfigError("linepack cap must be nonnegative");
  auto& idx = const_cast<ProgramIndex&>(index);
  for (int t = 0; t < model.horizon(); ++t)
    for (int l = 0; l < network.num_edges(); ++l) {
      if (network.edge(l).linepack_factor <= 0.0) continue;
      std_cap(builder, idx, model, PolicyMatrix::linepack, t, l, alpha, "linepack_cap");
    }
}

void variability_penalty(ProgramBuilder& builder, const ProgramIndex& index,
                         const GasNetwork& network, const UncertaintyModel& model, double alpha) {
  if (!(alpha >= 0.0)) throw ConfigError("variability penalty must be nonnegative");
  if (alpha == 0.0) return;
  for (int t = 1; t < model.horizon(); ++t) {
    const Eigen::MatrixXd& R = model.stage_factor(t);
    if (R.rows() == 0) continue;
    const int K = model.cumulative(t);
    const int Kprev = model.cumulative(t - 1);
    for (int n = 0; n < network.num_nodes(); ++n) {
      std::vector<LinExpr> dev(R.rows());
      for (int i = 0; i < R.rows(); ++i)
        for (int j = 0; j < K; ++j) {
          if (R(i, j) == 0.0) continue;
          dev[i].add(index.var(PolicyMatrix::pressure, t, n, j), R(i, j));
          if (j < Kprev) dev[i].add(index.var(PolicyMatrix::pressure, t - 1, n, j), -R(i, j));
        }
      builder.add_objective(builder.add_square_epigraph(dev), alpha);
    }
  }
}

double variability_value(const PolicySet& policy, const UncertaintyModel& model) {
  double v = 0.0;
  for (int t = 1; t < policy.horizon(); ++t) {
    const Eigen::MatrixXd& R = model.stage_factor(t);
    if (R.rows() == 0) continue;
    Eigen::MatrixXd D = policy.pressure[t];
    const int Kprev = static_cast<int>(policy.pressure[t - 1].cols());
    D.leftCols(Kprev) -= policy.pressure[t - 1];
    v += (D * R.transpose()).squaredNorm();
  }
  return v;
}

// ---------------------------------------------------------------------------
// Topology

int TopologyConfig::activated() const {
  return static_cast<int>(std::count(valves.begin(), valves.end(), true));
}

std::string TopologyConfig::bits() const {
  std::string s;
  for (bool v : valves) s.push_back(v ? '1' : '0');
  return s;
}

TopologyCatalog precompute_topologies(const GasNetwork& network, const IncidenceSet& incidence,
                                      const std::vector<Eigen::VectorXd>& mean_extractions,
                                      const std::vector<double>& reference_pressures,
                                      const StationaryOptions& options) {
  TopologyCatalog cat;
  cat.valve_edges = network.binary_valve_edges();
  const int V = static_cast<int>(cat.valve_edges.size());
  if (V > 12) throw ConfigError("topology enumeration supports at most 12 binary valves");
  for (int c = 0; c < (1 << V); ++c) {
    TopologyConfig cfg;
    cfg.id = c;
    cfg.valves.resize(V);
    for (int i = 0; i < V; ++i) {
      cfg.valves[i] = (c >> i) & 1;
      if (cfg.valves[i]) cfg.closed_edges.push_back(cat.valve_edges[i]);
    }
    if (!is_connected(network, cfg.closed_edges)) {
      cfg.failure = "network is disconnected";
      cat.configs.push_back(std::move(cfg));
      continue;
    }
    try {
      StationaryOptions opt = options;
      opt.closed_edges = cfg.closed_edges;
      cfg.point = solve_stationary(network, incidence, mean_extractions, reference_pressures, opt);
      LinearizeOptions lo;
      lo.flow_floor = options.flow_floor;
      lo.closed_edges = cfg.closed_edges;
      cfg.sens = linearize(network, cfg.point, lo);
      cfg.reference_pressures = reference_pressures;
      cfg.feasible = true;
    } catch (const Error& e) {
      cfg.failure = e.what();
    }
    cat.configs.push_back(std::move(cfg));
  }
  return cat;
}

int select_topology(const TopologyCatalog& catalog, const std::vector<ConfigOutcome>& outcomes) {
  int best = -1;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& o = outcomes[i];
    if (!o.attempted || o.status != SolveStatus::optimal) continue;
    if (best < 0) {
      best = static_cast<int>(i);
      continue;
    }
    const auto& b = outcomes[best];
    const int va = catalog.configs[o.config_id].activated();
    const int vb = catalog.configs[b.config_id].activated();
    if (o.objective < b.objective ||
        (o.objective == b.objective &&
         (va < vb || (va == vb && o.config_id < b.config_id))))
      best = static_cast<int>(i);
  }
  return best;
}

TopologyResult solve_with_topology(const GasNetwork& network, const IncidenceSet& incidence,
                                   const TopologyCatalog& catalog, const UncertaintyModel& model,
                                   const AssembleOptions& options, const ConicSolver& solver,
                                   const SolverSettings& settings) {
  if (catalog.configs.empty()) throw InfeasibleError("topology catalog is empty");
  TopologyResult res;
  std::string reasons;
  for (const auto& cfg : catalog.configs) {
    ConfigOutcome o;
    o.config_id = cfg.id;
    if (!cfg.feasible) {
      o.failure = cfg.failure;
      reasons += " [" + cfg.bits() + ": " + cfg.failure + "]";
      res.outcomes.push_back(o);
      continue;
    }
    AssembleOptions opt = options;
    opt.closed_edges = cfg.closed_edges;
    try {
      AssembledProgram prog = assemble(network, incidence, cfg.sens, model, cfg.reference_pressures, opt);
      Solution sol = solver.solve(prog.program, settings);
      o.attempted = true;
      o.status = sol.status;
      o.objective = sol.objective;
      res.outcomes.push_back(o);
      if (sol.status != SolveStatus::optimal)
        reasons += " [" + cfg.bits() + ": " + to_string(sol.status) + "]";
      if (select_topology(catalog, res.outcomes) == static_cast<int>(res.outcomes.size()) - 1) {
        res.best = cfg.id;
        res.objective = sol.objective;
        res.policy = decode_policy(prog.index, sol.x, model.horizon());
        res.solution = std::move(sol);
        res.program = std::move(prog);
      }
    } catch (const Error& e) {
      o.failure = e.what();
      reasons += " [" + cfg.bits() + ": " + e.what() + "]";
      res.outcomes.push_back(o);
    }
  }
  if (res.best < 0) throw InfeasibleError("no topology configuration is solvable:" + reasons);
  return res;
}

std::vector<FrontierRow> frontier(const GasNetwork& network, const IncidenceSet& incidence,
                                  const TopologyCatalog& catalog, const UncertaintyModel& model,
                                  const AssembleOptions& options,
                                  const std::vector<double>& alphas, const ConicSolver& solver,
                                  const SolverSettings& settings, int threads) {
  const int C = static_cast<int>(catalog.configs.size());
  const int J = static_cast<int>(alphas.size()) * C;
  std::vector<FrontierRow> rows(J);
  std::vector<ConfigOutcome> outcomes(J);

  auto job = [&](int k) {
    const double alpha = alphas[k / C];
    const auto& cfg = catalog.configs[k % C];
    FrontierRow& row = rows[k];
    row.alpha_rho = alpha;
    row.config_id = cfg.id;
    row.valve_bits = cfg.bits();
    outcomes[k].config_id = cfg.id;
    if (!cfg.feasible) {
      row.status = "infeasible_topology";
      row.expected_cost = row.variability = std::numeric_limits<double>::quiet_NaN();
      return;
    }
    AssembleOptions opt = options;
    opt.closed_edges = cfg.closed_edges;
    opt.controls.variability_penalty = alpha;
    try {
      auto prog = assemble(network, incidence, cfg.sens, model, cfg.reference_pressures, opt);
      auto sol = solver.solve(prog.program, settings);
      row.status = to_string(sol.status);
      outcomes[k].attempted = true;
      outcomes[k].status = sol.status;
      outcomes[k].objective = sol.objective;
      if (sol.status == SolveStatus::optimal) {
        const PolicySet p = decode_policy(prog.index, sol.x, model.horizon());
        row.expected_cost = prog.objective.value(p);
        row.variability = variability_value(p, model);
      } else {
        row.expected_cost = row.variability = std::numeric_limits<double>::quiet_NaN();
      }
    } catch (const Error& e) {
      row.status = e.kind();
      row.expected_cost = row.variability = std::numeric_limits<double>::quiet_NaN();
    }
  };

  int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, std::max(1, J));
  if (workers == 1) {
    for (int k = 0; k < J; ++k) job(k);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int k = next++; k < J; k = next++) job(k);
      });
    for (auto& th : pool) th.join();
  }

  for (std::size_t a = 0; a < alphas.size(); ++a) {
    std::vector<ConfigOutcome> slice(outcomes.begin() + a * C, outcomes.begin() + (a + 1) * C);
    const int b = select_topology(catalog, slice);
    if (b >= 0) rows[a * C + b].best = true;
  }
  return rows;
}

}  // namespace gasnet
