#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "common.hpp"
#include "gasnet/applications.hpp"
#include "gasnet/errors.hpp"
#include "gasnet/validation.hpp"

using namespace gasnet;
using namespace testing_support;

namespace {

const Instance& triangle() {
  static const Instance inst = load_fixture("triangle");
  return inst;
}

// Supply at n1 reaches the demand node n3 over three parallel routes; the
// routes through n2 and n4 each end in a binary valve.
struct ValveCase {
  GasNetwork net;
  IncidenceSet inc;
  UncertaintyModel model;
  std::vector<double> ref;
};

ValveCase valve_case() {
  std::vector<Node> nodes{make_node("n1", 4.5, 5.5, 0.0, 30.0, 10.0, 0.2, true),
                          make_node("n2", 2.5, 6.0, 0.0, 4.0, 11.0, 0.4), make_node("n3", 2.5, 6.0),
                          make_node("n4", 2.5, 6.0)};
  std::vector<Edge> edges{make_edge("n1", "n2", 2.0, 0.2, 0.6), make_edge("n2", "n3", 2.0, 0.2, 0.6),
                          make_edge("n1", "n4", 2.0, 0.2, 0.6), make_edge("n4", "n3", 2.0, 0.2, 0.6),
                          make_edge("n1", "n3", 3.0, 0.2, 0.6)};
  edges[1].has_binary_valve = true;
  edges[3].has_binary_valve = true;
  GasNetwork net(nodes, edges);
  IncidenceSet inc = build_incidence(net);
  Eigen::VectorXd mean = Eigen::VectorXd::Ones(3);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(3, 3);
  cov(1, 1) = cov(2, 2) = 0.02;
  const int n3 = *net.node_index("n3");
  Eigen::MatrixXd d0 = Eigen::MatrixXd::Zero(4, 1), d1 = Eigen::MatrixXd::Zero(4, 2),
                  d2 = Eigen::MatrixXd::Zero(4, 3);
  d0(n3, 0) = 4.0;
  d1(n3, 0) = 3.5;
  d1(n3, 1) = 0.6;
  d2(n3, 0) = 3.0;
  d2(n3, 1) = 0.4;
  d2(n3, 2) = 0.6;
  UncertaintyModel m({1, 1, 1}, mean, cov, {d0, d1, d2}, {0.05, 0.05, 0.05});
  return {net, inc, m, {5.0, 5.0, 5.0}};
}

std::vector<Eigen::VectorXd> mean_ext(const UncertaintyModel& m) {
  std::vector<Eigen::VectorXd> v;
  for (int t = 0; t < m.horizon(); ++t) v.push_back(m.mean_extraction(t));
  return v;
}

Solution raw_solve(const Instance& inst, const AssembleOptions& opt) {
  const AssembledProgram ap = assemble(inst.network, inst.incidence, inst.sens, inst.model, inst.reference_pressures, opt);
  return ipm().solve(ap.program, {});
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST(InjectionCap, ZeroCapLeavesNoBalancing) {
  // every injection is pinned to its mean, so uncertain demand cannot be met
  AssembleOptions opt;
  opt.controls.injection_cap = 0.0;
  EXPECT_EQ(raw_solve(triangle(), opt).status, SolveStatus::primal_infeasible);
  const Instance certain = prepare_instance(triangle().network, triangle().model.with_scaled_covariance(0.0),
                                            triangle().reference_pressures);
  const Solution s = raw_solve(certain, opt);
  ASSERT_TRUE(s.optimal());
  EXPECT_LE(rel(s.objective, raw_solve(certain, {}).objective), 1e-6);
}

TEST(InjectionCap, VacuousCapKeepsOptimum) {
  const Solution base = raw_solve(triangle(), {});
  AssembleOptions opt;
  opt.controls.injection_cap = 1e3;
  const Solution capped = raw_solve(triangle(), opt);
  ASSERT_TRUE(base.optimal() && capped.optimal());
  EXPECT_LE(rel(capped.objective, base.objective), 1e-6);
}

TEST(InjectionCap, OutOfSampleRatio) {
  AssembleOptions opt;
  opt.controls.injection_cap = 0.05;
  const PlanResult pr = solve_policy(triangle(), opt, ipm());
  const Eigen::MatrixXd z = sample(triangle().model, 1000, 5);
  const ValidationReport rep = evaluate(pr.policy, triangle().network, triangle().incidence, triangle().sens,
                                        triangle().model, triangle().reference_pressures, z, false);
  // sample std fluctuates around the model std by O(1/sqrt(2 S))
  EXPECT_LE(rep.max_injection_std_ratio, 0.05 * (1.0 + 3.0 / std::sqrt(2.0 * 1000)));
}

TEST(LinepackCap, VacuousCapKeepsOptimum) {
  const Solution base = raw_solve(triangle(), {});
  AssembleOptions opt;
  opt.controls.linepack_cap = 1e3;
  const Solution capped = raw_solve(triangle(), opt);
  ASSERT_TRUE(capped.optimal());
  EXPECT_LE(rel(capped.objective, base.objective), 1e-6);
}

TEST(LinepackCap, BisectionFindsThreshold) {
  auto status = [&](double a) {
    AssembleOptions opt;
    opt.controls.linepack_cap = a;
    return raw_solve(triangle(), opt).status;
  };
  double lo = 0.0, hi = 1.0;
  ASSERT_EQ(status(hi), SolveStatus::optimal);
  if (status(lo) == SolveStatus::optimal) GTEST_SKIP() << "every cap is feasible on this fixture";
  for (int i = 0; i < 12; ++i) {
    const double mid = 0.5 * (lo + hi);
    (status(mid) == SolveStatus::optimal ? hi : lo) = mid;
  }
  EXPECT_EQ(status(0.5 * lo), SolveStatus::primal_infeasible);
  double prev = -1.0;
  for (double a : {1.0, 0.5 * (1.0 + hi), hi * 1.05, hi}) {
    AssembleOptions opt;
    opt.controls.linepack_cap = a;
    const Solution s = raw_solve(triangle(), opt);
    ASSERT_TRUE(s.optimal()) << a;
    EXPECT_GE(s.objective, prev - 1e-6 * std::abs(s.objective));
    prev = s.objective;
  }
}

TEST(Variability, ZeroWhenStagesAgree) {
  const UncertaintyModel& m = triangle().model;
  PolicySet p = PolicySet::zeros(3, 3, {1, 3, 5});
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  Eigen::MatrixXd P(3, 3);
  for (int i = 0; i < P.size(); ++i) P.data()[i] = g(rng);
  p.pressure[0] = P.leftCols(1);
  p.pressure[1] = P;
  p.pressure[2].leftCols(3) = P;
  // only the stage-2 columns differ from the stage-1 policy
  const double want = (P.rightCols(2) * m.stage_factor(1).rightCols(2).transpose()).squaredNorm();
  EXPECT_NEAR(variability_value(p, m), want, 1e-12 * (1.0 + want));
  p.pressure[1].rightCols(2).setZero();
  p.pressure[2].leftCols(3) = p.pressure[1];
  EXPECT_NEAR(variability_value(p, m), 0.0, 1e-14);
}

TEST(Variability, ZeroCovariance) {
  const UncertaintyModel m = triangle().model.with_scaled_covariance(0.0);
  PolicySet p = PolicySet::zeros(3, 3, {1, 3, 5});
  for (int t = 0; t < 3; ++t) p.pressure[t].setRandom();
  EXPECT_EQ(variability_value(p, m), 0.0);
}

TEST(Variability, TraceAgainstMonteCarlo) {
  const UncertaintyModel& m = triangle().model;
  PolicySet p = PolicySet::zeros(3, 3, {1, 3, 5});
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  for (int t = 0; t < 3; ++t)
    for (int i = 0; i < p.pressure[t].size(); ++i) p.pressure[t].data()[i] = g(rng);
  const Eigen::MatrixXd z = sample(m, 1000000, 13);
  double acc = 0.0;
  for (int i = 0; i < z.rows(); ++i) {
    const Eigen::VectorXd c = z.row(i).transpose() - m.mean();
    for (int t = 1; t < 3; ++t) {
      const Eigen::VectorXd d = p.pressure[t] * c.head(m.cumulative(t)) -
                                p.pressure[t - 1] * c.head(m.cumulative(t - 1));
      acc += d.squaredNorm();
    }
  }
  const double mc = acc / z.rows();
  EXPECT_LT(std::abs(variability_value(p, m) - mc) / mc, 0.005);
}

TEST(Variability, PenaltyLowersTheTerm) {
  const PlanResult base = solve_policy(triangle(), {}, ipm());
  AssembleOptions opt;
  opt.controls.variability_penalty = 50.0;
  const PlanResult pen = solve_policy(triangle(), opt, ipm());
  EXPECT_LE(variability_value(pen.policy, triangle().model), variability_value(base.policy, triangle().model) + 1e-9);
  EXPECT_GE(pen.program.objective.value(pen.policy), base.program.objective.value(base.policy) - 1e-6);
}

TEST(Topology, NoValvesGivesOneConfiguration) {
  const Instance& inst = triangle();
  const TopologyCatalog cat =
      precompute_topologies(inst.network, inst.incidence, mean_ext(inst.model), inst.reference_pressures);
  ASSERT_EQ(cat.configs.size(), 1u);
  ASSERT_TRUE(cat.configs[0].feasible);
  for (int t = 0; t < 3; ++t) {
    EXPECT_LE((cat.configs[0].point.pressure[t] - inst.point.pressure[t]).norm(), 1e-9);
    EXPECT_LE((cat.configs[0].sens.W1[t] - inst.sens.W1[t]).norm(), 1e-6 * (1.0 + inst.sens.W1[t].norm()));
  }
  const TopologyResult tr = solve_with_topology(inst.network, inst.incidence, cat, inst.model, {}, ipm());
  const Solution direct = raw_solve(inst, {});
  EXPECT_LE(rel(tr.objective, direct.objective), 1e-7);
}

TEST(Topology, FourConfigurationsBruteForce) {
  const ValveCase vc = valve_case();
  const TopologyCatalog cat = precompute_topologies(vc.net, vc.inc, mean_ext(vc.model), vc.ref);
  ASSERT_EQ(cat.configs.size(), 4u);
  ASSERT_EQ(cat.valve_edges.size(), 2u);
  double best = std::numeric_limits<double>::infinity();
  int best_id = -1;
  std::vector<SolveStatus> statuses;
  for (const auto& cfg : cat.configs) {
    ASSERT_TRUE(cfg.feasible) << cfg.bits() << " " << cfg.failure;
    for (int l : cfg.closed_edges)
      for (int t = 0; t < 3; ++t) {
        EXPECT_EQ(cfg.sens.w0[t][l], 0.0);
        EXPECT_EQ(cfg.sens.W1[t].row(l).norm(), 0.0);
        EXPECT_EQ(cfg.sens.W2[t].row(l).norm(), 0.0);
      }
    AssembleOptions opt;
    opt.closed_edges = cfg.closed_edges;
    const AssembledProgram ap = assemble(vc.net, vc.inc, cfg.sens, vc.model, cfg.reference_pressures, opt);
    const Solution s = ipm().solve(ap.program, {});
    statuses.push_back(s.status);
    if (!s.optimal()) continue;
    if (best_id < 0 || s.objective < best - 1e-9 * std::abs(best) ||
        (std::abs(s.objective - best) <= 1e-9 * std::abs(best) && cfg.activated() < cat.configs[best_id].activated())) {
      best = s.objective;
      best_id = cfg.id;
    }
  }
  const TopologyResult tr = solve_with_topology(vc.net, vc.inc, cat, vc.model, {}, ipm());
  EXPECT_EQ(tr.best, best_id);
  EXPECT_LE(rel(tr.objective, best), 1e-7);
  ASSERT_GE(best_id, 0);
  for (const auto& o : tr.outcomes) {
    EXPECT_TRUE(o.attempted);
    EXPECT_EQ(o.status, statuses[o.config_id]);
  }
}

TEST(Topology, TieBreakPrefersFewerValves) {
  TopologyCatalog cat;
  cat.valve_edges = {0, 1};
  for (int id = 0; id < 4; ++id) {
    TopologyConfig c;
    c.id = id;
    c.valves = {bool(id & 1), bool(id & 2)};
    c.feasible = true;
    cat.configs.push_back(c);
  }
  std::vector<ConfigOutcome> out(4);
  for (int id = 0; id < 4; ++id) out[id] = {id, true, SolveStatus::optimal, 10.0, ""};
  out[0].objective = 10.5;
  EXPECT_EQ(select_topology(cat, out), 1);
  out[0].status = SolveStatus::primal_infeasible;
  out[1].objective = out[2].objective = 11.0;
  out[3].objective = 11.0;
  EXPECT_EQ(select_topology(cat, out), 1);
  for (auto& o : out) o.status = SolveStatus::primal_infeasible;
  EXPECT_EQ(select_topology(cat, out), -1);
}

TEST(Frontier, MonotoneOnTriangle) {
  const Instance& inst = triangle();
  const TopologyCatalog cat =
      precompute_topologies(inst.network, inst.incidence, mean_ext(inst.model), inst.reference_pressures);
  const auto rows = frontier(inst.network, inst.incidence, cat, inst.model, {}, {0.0, 10.0, 50.0, 100.0}, ipm());
  ASSERT_EQ(rows.size(), 4u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LE(rows[i].variability, rows[i - 1].variability * (1.0 + 1e-6) + 1e-12);
    EXPECT_GE(rows[i].expected_cost, rows[i - 1].expected_cost * (1.0 - 1e-6));
    EXPECT_TRUE(rows[i].best);
  }
}

TEST(Controls, RejectNegativeFactors) {
  ControlOptions c;
  c.injection_cap = -0.1;
  EXPECT_THROW(c.check(), ConfigError);
  c.injection_cap.reset();
  c.variability_penalty = -1.0;
  EXPECT_THROW(c.check(), ConfigError);
}
