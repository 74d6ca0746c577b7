#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "common.hpp"
#include "gasnet/errors.hpp"
#include "gasnet/ldr_program.hpp"

using namespace gasnet;
using namespace testing_support;

namespace {

GasNetwork single_pipe() {
  return GasNetwork({make_node("1", 1.0, 5.0, 0.0, 10.0, 1.0, 0.1, true), make_node("2", 1.0, 5.0)},
                    {make_edge("1", "2", 1.0)});
}

// Triangle with a two-stage model, k = (1, 2).
struct SmallCase {
  GasNetwork net;
  IncidenceSet inc;
  UncertaintyModel model;
  Instance inst;
};

SmallCase triangle_two_stage() {
  const Instance base = load_fixture("triangle");
  Eigen::VectorXd mean = Eigen::VectorXd::Ones(3);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(3, 3);
  cov(1, 1) = cov(2, 2) = 0.02;
  std::vector<Eigen::MatrixXd> delta{base.model.extraction(0), base.model.extraction(1)};
  UncertaintyModel m({1, 2}, mean, cov, delta, {0.05, 0.05});
  Instance inst = prepare_instance(base.network, m);
  return {base.network, inst.incidence, m, inst};
}

PolicySet random_injection_policy(int N, int E, const UncertaintyModel& m, unsigned seed) {
  std::vector<int> cols;
  for (int t = 0; t < m.horizon(); ++t) cols.push_back(m.cumulative(t));
  PolicySet p = PolicySet::zeros(N, E, cols);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 2.0);
  for (auto& th : p.injection)
    for (int i = 0; i < th.size(); ++i) th.data()[i] = u(rng);
  return p;
}

// Largest admissible constant deviation of a scalar two-sided chance
// constraint, by bisection on a grid feasibility check of (x, y).
double exact_admissible_std(double mean, double lower, double upper, double eps) {
  const double c = 0.5 * (upper + lower), d = 0.5 * (upper - lower);
  auto feasible = [&](double sigma) {
    const double step = 1e-3 * d;
    for (double x = 0.0; x <= d; x += step) {
      const double y = std::max(0.0, std::abs(mean - c) - x);
      if (std::hypot(sigma, y) / std::sqrt(eps) <= d - x + 1e-12) return true;
    }
    return false;
  };
  double lo = 0.0, hi = d;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? lo : hi) = mid;
  }
  return lo;
}

// Same quantity from the solver: maximize sigma under the reformulation.
double solver_admissible_std(double mean, double lower, double upper, double eps, bool exact) {
  ProgramBuilder b;
  const int sigma = b.add_variables(1, ConeType::nonnegative);
  LinExpr dev;
  dev.add(sigma, 1.0);
  LinExpr m(mean);
  if (exact)
    exact_double_sided(b, {dev}, m, lower, upper, eps);
  else
    split_double_sided(b, {dev}, m, lower, upper, eps);
  b.add_objective(sigma, -1.0);
  const Solution s = ipm().solve(b.build(), {});
  EXPECT_TRUE(s.optimal());
  return s.x[sigma];
}

}  // namespace

TEST(Objective, LinearWhenQuadraticCostVanishes) {
  const Instance inst = load_fixture("triangle");
  ObjectiveTerms o = objective_terms(inst.network, inst.model);
  o.c2.setZero();
  const PolicySet p = random_injection_policy(3, 3, inst.model, 1);
  double direct = 0.0;
  for (int t = 0; t < 3; ++t) direct += o.c1.dot(p.injection[t] * inst.model.mean_prefix(t));
  EXPECT_NEAR(o.value(p), direct, 1e-12);
  EXPECT_EQ(o.quadratic_part(p), 0.0);
}

TEST(Objective, DegenerateMomentsGiveNominalCost) {
  const Instance base = load_fixture("triangle");
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(5);
  mean[0] = 1.0;
  UncertaintyModel m({1, 2, 2}, mean, Eigen::MatrixXd::Zero(5, 5), base.model.extraction(), {0.05, 0.05, 0.05});
  const ObjectiveTerms o = objective_terms(base.network, m);
  const PolicySet p = random_injection_policy(3, 3, m, 2);
  double nominal = 0.0;
  for (int t = 0; t < 3; ++t)
    for (int n = 0; n < 3; ++n) {
      const double th = p.injection[t](n, 0);
      nominal += o.c1[n] * th + o.c2[n] * th * th;
    }
  EXPECT_NEAR(o.value(p), nominal, 1e-10);
}

TEST(Objective, MomentFormulaAgainstMonteCarlo) {
  const Instance inst = load_fixture("triangle");
  const ObjectiveTerms o = objective_terms(inst.network, inst.model);
  const PolicySet p = random_injection_policy(3, 3, inst.model, 3);
  const Eigen::MatrixXd z = sample(inst.model, 1000000, 4);
  double acc = 0.0;
  for (int i = 0; i < z.rows(); ++i) {
    const Eigen::VectorXd zi = z.row(i).transpose();
    for (int t = 0; t < 3; ++t) {
      const Eigen::VectorXd th = p.injection[t] * zi.head(inst.model.cumulative(t));
      acc += o.c1.dot(th) + th.dot(o.c2.cwiseProduct(th));
    }
  }
  const double mc = acc / z.rows();
  EXPECT_LT(std::abs(o.value(p) - mc) / std::abs(mc), 0.005);
}

TEST(Equalities, CertainSingleStageMatchesClosedForm) {
  const GasNetwork net = single_pipe();
  const IncidenceSet inc = build_incidence(net);
  const UncertaintyModel m = UncertaintyModel::deterministic({Eigen::Vector2d(0.0, 2.0)});
  Sensitivities sens;
  StationaryPoint pt;
  pt.flow = {Eigen::VectorXd::Constant(1, 2.0)};
  pt.pressure = {Eigen::Vector2d(3.0, std::sqrt(5.0))};
  pt.regulation = {Eigen::VectorXd::Zero(1)};
  sens = linearize(net, pt);
  const AssembledProgram ap = assemble(net, inc, sens, m, {3.0});
  PolicySet p = PolicySet::zeros(2, 1, {1});
  p.flow[0](0, 0) = p.flow_plus[0](0, 0) = p.flow_minus[0](0, 0) = 2.0;
  p.pressure[0].col(0) = pt.pressure[0];
  p.injection[0](0, 0) = 2.0;
  const Eigen::VectorXd x = encode_policy(ap.index, p);
  const auto eqs = equality_blocks(net, inc, sens, m, {3.0}, ap.index);
  for (const auto& eq : eqs) EXPECT_NEAR(equality_residual(eq, x), 0.0, 1e-12) << eq.equation;
}

TEST(Equalities, ShapeMismatchNamesEquation) {
  const Instance inst = load_fixture("triangle");
  const AssembledProgram ap = assemble(inst.network, inst.incidence, inst.sens, inst.model, inst.reference_pressures);
  Sensitivities bad = inst.sens;
  bad.W1[1] = Eigen::MatrixXd::Zero(2, 3);
  try {
    equality_blocks(inst.network, inst.incidence, bad, inst.model, inst.reference_pressures, ap.index);
    FAIL();
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("weymouth at stage 1"), std::string::npos);
  }
}

TEST(Program, ReferenceRowIsPinned) {
  const Instance inst = load_fixture("triangle");
  const PlanResult pr = solve_policy(inst, {}, ipm());
  const int r = inst.network.reference();
  for (int t = 0; t < 3; ++t) {
    EXPECT_NEAR(pr.policy.pressure[t](r, 0), inst.reference_pressures[t], 1e-8);
    for (int j = 1; j < pr.policy.pressure[t].cols(); ++j) EXPECT_NEAR(pr.policy.pressure[t](r, j), 0.0, 1e-8);
  }
}

TEST(Program, EqualityResidualScan) {
  const Instance inst = load_fixture("triangle");
  const PlanResult pr = solve_policy(inst, {}, ipm());
  const auto eqs = equality_blocks(inst.network, inst.incidence, inst.sens, inst.model,
                                   inst.reference_pressures, pr.program.index);
  const Eigen::VectorXd x = encode_policy(pr.program.index, pr.policy);
  double worst = 0.0;
  for (const auto& eq : eqs) worst = std::max(worst, std::abs(equality_residual(eq, x)));
  EXPECT_LE(worst, 1e-6);
}

TEST(Chebyshev, Coefficients) {
  EXPECT_DOUBLE_EQ(chebyshev_coefficient(0.5), 1.0);
  EXPECT_NEAR(chebyshev_coefficient(0.005), std::sqrt(0.995 / 0.005), 1e-12);
  EXPECT_NEAR(chebyshev_coefficient(0.005), 14.1067, 1e-4);
  EXPECT_THROW(chebyshev_coefficient(0.0), ConfigError);
  EXPECT_THROW(chebyshev_coefficient(1.0), ConfigError);
}

TEST(Chebyshev, ZeroVarianceRowIsDeterministic) {
  ProgramBuilder b;
  const int x = b.add_variables(1, ConeType::free);
  LinExpr margin(-2.0);
  margin.add(x, 1.0);
  const ConstraintRecord rec = chebyshev_single_sided(b, {}, margin, 0.05);
  EXPECT_EQ(rec.cone, ConeType::nonnegative);
  b.add_objective(x, 1.0);
  const Solution s = ipm().solve(b.build(), {});
  ASSERT_TRUE(s.optimal());
  EXPECT_NEAR(s.x[x], 2.0, 1e-7);
}

TEST(ExactDoubleSided, ZeroVarianceInsideInterval) {
  const double mean = 0.3, lower = -1.0, upper = 1.0, eps = 0.05;
  ProgramBuilder b;
  const auto [xi, yi] = exact_double_sided(b, {}, LinExpr(mean), lower, upper, eps);
  const Solution s = ipm().solve(b.build(), {});
  ASSERT_TRUE(s.optimal());
  const double c = 0.0, d = 1.0;
  bool grid_hit = false;
  for (double x = 0.0; x <= d && !grid_hit; x += 1e-3)
    for (double y = 0.0; y <= 2.0 && !grid_hit; y += 1e-3)
      grid_hit = y / std::sqrt(eps) <= d - x && std::abs(mean - c) <= y + x;
  EXPECT_TRUE(grid_hit);
  const double x = s.x[xi], y = s.x[yi];
  EXPECT_GE(x, -1e-8);
  EXPECT_LE(x, d + 1e-8);
  EXPECT_LE(y / std::sqrt(eps), d - x + 1e-7);
  EXPECT_LE(std::abs(mean - c), x + y + 1e-7);
}

TEST(ExactDoubleSided, UnitRiskIsPlainNorm) {
  // eps = 1: ||(sigma, y)|| <= d - x; with the mean at the centre sigma reaches d
  EXPECT_NEAR(solver_admissible_std(0.0, -1.0, 1.0, 1.0, true), 1.0, 1e-6);
  EXPECT_THROW({
    ProgramBuilder b;
    exact_double_sided(b, {}, LinExpr(0.0), 1.0, 1.0, 0.1);
  }, ConfigError);
}

TEST(ExactDoubleSided, AdmitsMoreVarianceThanSplit) {
  for (double mean : {0.0, 0.3, -0.5}) {
    const double eps = 0.05;
    const double oracle = exact_admissible_std(mean, -1.0, 1.0, eps);
    const double exact = solver_admissible_std(mean, -1.0, 1.0, eps, true);
    const double split = solver_admissible_std(mean, -1.0, 1.0, eps, false);
    EXPECT_NEAR(exact, oracle, 2e-3) << mean;
    const double k = chebyshev_coefficient(eps / 2);
    EXPECT_NEAR(split, std::min(mean + 1.0, 1.0 - mean) / k, 1e-6) << mean;
    EXPECT_GT(exact, split) << mean;
  }
}

TEST(Program, CertainSinglePipeMatchesStationary) {
  GasNetwork net = single_pipe();
  const IncidenceSet inc = build_incidence(net);
  const std::vector<Eigen::VectorXd> ext{Eigen::Vector2d(0.0, 2.0)};
  const StationaryPoint pt = solve_stationary(net, inc, ext, {3.0});
  const double stationary_cost = 1.0 * pt.injection[0][0] + 0.1 * pt.injection[0][0] * pt.injection[0][0];
  const Sensitivities sens = linearize(net, pt);
  const AssembledProgram ap = assemble(net, inc, sens, UncertaintyModel::deterministic(ext), {3.0});
  const Solution s = ipm().solve(ap.program, {});
  ASSERT_TRUE(s.optimal());
  EXPECT_NEAR(s.objective, stationary_cost, 1e-6);
  EXPECT_NEAR(stationary_cost, 2.0 + 0.4, 1e-6);
}

TEST(Manifest, HandCountTwoStages) {
  const SmallCase sc = triangle_two_stage();
  const AssembledProgram ap = assemble(sc.net, sc.inc, sc.inst.sens, sc.model, sc.inst.reference_pressures);
  const int N = 3, E = 3;
  EXPECT_EQ(ap.manifest.policy_variables, (1 + 3) * (3 * N + 4 * E));
  // stage 1 is certain, so only stage 2 carries (x, y) pairs: injection at n1, n2,
  // the compressor, and all three pressure bands
  const int pairs = 2 + 1 + 3;
  EXPECT_EQ(ap.manifest.auxiliary_variables, 2 * pairs);
  EXPECT_GE(ap.manifest.total_variables, ap.manifest.policy_variables + ap.manifest.auxiliary_variables);
  EXPECT_EQ(ap.manifest.total_variables, ap.program.num_variables());
}

TEST(ProgramIndex, BijectiveOverBlocks) {
  const Instance inst = load_fixture("triangle");
  const AssembledProgram ap = assemble(inst.network, inst.incidence, inst.sens, inst.model, inst.reference_pressures);
  std::vector<char> seen(ap.program.num_variables(), 0);
  for (const auto& b : ap.index.blocks())
    for (int i = 0; i < b.rows; ++i)
      for (int j = 0; j < b.cols; ++j) {
        const int v = ap.index.var(b.name, b.stage, i, j);
        ASSERT_FALSE(seen[v]);
        seen[v] = 1;
        const auto e = ap.index.locate(v);
        ASSERT_TRUE(e.has_value());
        EXPECT_EQ(e->name, b.name);
        EXPECT_EQ(e->stage, b.stage);
        EXPECT_EQ(e->row, i);
        EXPECT_EQ(e->col, j);
      }
}

TEST(Policy, EncodeDecodeRoundTrip) {
  const Instance inst = load_fixture("triangle");
  const PlanResult pr = solve_policy(inst, {}, ipm());
  const Eigen::VectorXd x = encode_policy(pr.program.index, pr.policy);
  const PolicySet back = decode_policy(pr.program.index, x, 3);
  for (auto m : kPolicyMatrices)
    for (int t = 0; t < 3; ++t) EXPECT_EQ(back[m][t], pr.policy[m][t]);
  const PolicySet padded = pr.policy.resized({5, 5, 5});
  EXPECT_EQ(padded.pressure[0].cols(), 5);
  EXPECT_EQ(padded.pressure[0].rightCols(4).norm(), 0.0);
}

TEST(Program, RiskOutsideUnitInterval) {
  const Instance inst = load_fixture("triangle");
  EXPECT_THROW(assemble(inst.network, inst.incidence, inst.sens, inst.model.with_risk(1.0), inst.reference_pressures),
               Error);
}
