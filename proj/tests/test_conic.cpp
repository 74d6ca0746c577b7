#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "common.hpp"
#include "gasnet/errors.hpp"
#include "socp_suite.hpp"

using namespace gasnet;
using namespace testing_support;

namespace {

bool in_cone(const ConicProgram& p, const Eigen::VectorXd& x, double tol) {
  int k = 0;
  for (const auto& c : p.cones) {
    if (c.type == ConeType::nonnegative) {
      for (int i = 0; i < c.dim; ++i)
        if (x[k + i] < -tol) return false;
    } else if (c.type == ConeType::second_order) {
      if (x.segment(k + 1, c.dim - 1).norm() > x[k] + tol) return false;
    }
    k += c.dim;
  }
  return true;
}

}  // namespace

TEST(SquareEpigraph, ZeroAndScalar) {
  for (double v : {0.0, 3.0}) {
    ProgramBuilder b;
    const int u = b.add_square_epigraph({LinExpr(v)});
    b.add_objective(u, 1.0);
    const Solution s = ipm().solve(b.build(), {});
    ASSERT_TRUE(s.optimal());
    EXPECT_NEAR(s.x[u], v * v, 1e-8);
  }
}

TEST(SquareEpigraph, RandomVector) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  std::vector<LinExpr> v;
  Eigen::VectorXd ref(5);
  for (int i = 0; i < 5; ++i) {
    ref[i] = g(rng);
    v.emplace_back(ref[i]);
  }
  ProgramBuilder b;
  const int u = b.add_square_epigraph(v);
  b.add_objective(u, 1.0);
  const Solution s = ipm().solve(b.build(), {});
  ASSERT_TRUE(s.optimal());
  EXPECT_NEAR(s.x[u], ref.squaredNorm(), 1e-8);
}

TEST(AnalyticSuite, StatusesAndValues) {
  const auto cases = suite::analytic_instances();
  ASSERT_EQ(cases.size(), 20u);
  for (const auto& inst : cases) {
    const Solution s = ipm().solve(inst.program, {});
    ASSERT_EQ(s.status, inst.status) << inst.name;
    const auto& p = inst.program;
    if (inst.status == SolveStatus::optimal) {
      EXPECT_NEAR(s.objective, inst.value, 1e-7 * (1.0 + std::abs(inst.value))) << inst.name;
      EXPECT_LE(s.primal_residual, 1e-7 * (1.0 + p.b.norm())) << inst.name;
      EXPECT_LE(s.dual_residual, 1e-7 * (1.0 + p.c.norm())) << inst.name;
      EXPECT_LE(s.relative_gap, 1e-7) << inst.name;
      EXPECT_TRUE(in_cone(p, s.x, 1e-9)) << inst.name;
      EXPECT_TRUE(in_cone(p, s.s, 1e-9)) << inst.name;
    } else if (inst.status == SolveStatus::primal_infeasible) {
      EXPECT_GT(p.b.dot(s.y), 0.0) << inst.name;
      EXPECT_LE((p.A.transpose() * s.y + s.s).norm(), 1e-6) << inst.name;
      EXPECT_TRUE(in_cone(p, s.s, 1e-9)) << inst.name;
    } else {
      EXPECT_LT(p.c.dot(s.x), 0.0) << inst.name;
      EXPECT_LE((p.A * s.x).norm(), 1e-6) << inst.name;
      EXPECT_TRUE(in_cone(p, s.x, 1e-9)) << inst.name;
    }
  }
}

TEST(Program, CheckRejectsBadCones) {
  ConicProgram p;
  p.c = Eigen::VectorXd::Zero(3);
  p.A.resize(0, 3);
  p.b.resize(0);
  p.cones = {{ConeType::nonnegative, 2}};
  EXPECT_THROW(p.check(), DimensionError);
  p.cones = {{ConeType::nonnegative, 3}, {ConeType::free, 0}};
  EXPECT_THROW(p.check(), DimensionError);
  p.cones = {{ConeType::second_order, 3}};
  EXPECT_NO_THROW(p.check());
}

TEST(ProgramIo, RoundTripIsExact) {
  const auto cases = suite::analytic_instances();
  for (const auto& inst : cases) {
    std::stringstream ss;
    write_program(ss, inst.program);
    const ConicProgram q = read_program(ss);
    EXPECT_EQ(q.c, inst.program.c) << inst.name;
    EXPECT_EQ(q.b, inst.program.b) << inst.name;
    EXPECT_EQ(Eigen::MatrixXd(q.A), Eigen::MatrixXd(inst.program.A)) << inst.name;
    ASSERT_EQ(q.cones.size(), inst.program.cones.size());
    for (std::size_t i = 0; i < q.cones.size(); ++i) {
      EXPECT_EQ(q.cones[i].type, inst.program.cones[i].type);
      EXPECT_EQ(q.cones[i].dim, inst.program.cones[i].dim);
    }
    EXPECT_EQ(q.offset, inst.program.offset);
  }
}

TEST(Builder, ObjectiveConstantAndLowering) {
  ProgramBuilder b;
  const int x = b.add_variables(2, ConeType::free);
  LinExpr e;
  e.add(x, 1.0).add(x + 1, 1.0);
  b.add_equality(e, 3.0);
  LinExpr lo(-1.0);
  lo.add(x, 1.0);
  b.add_nonnegative(lo);
  LinExpr obj;
  obj.add(x, 2.0).add(x + 1, 1.0);
  b.add_objective(obj);
  b.add_objective_constant(10.0);
  const ConicProgram p = b.build();
  EXPECT_NO_THROW(p.check());
  const Solution s = ipm().solve(p, {});
  ASSERT_TRUE(s.optimal());
  // x0 = 1, x1 = 2
  EXPECT_NEAR(s.objective, 2.0 + 2.0 + 10.0, 1e-7);
}

TEST(Solver, Factory) {
  EXPECT_EQ(make_solver("ipm")->name(), "ipm");
  EXPECT_THROW(make_solver("nope"), ConfigError);
}

TEST(Solver, IterationCap) {
  const auto cases = suite::analytic_instances();
  SolverSettings st;
  st.max_iterations = 1;
  const Solution s = ipm().solve(cases[9].program, st);
  EXPECT_EQ(s.status, SolveStatus::iteration_limit);
}

TEST(Solver, RandomFeasibleLps) {
  // min c^T x, A x = A x0, x >= 0 with c = A^T y0 + s0 and complementary x0, s0:
  // x0 is optimal by construction.
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  std::normal_distribution<double> g;
  for (int rep = 0; rep < 5; ++rep) {
    const int m = 4, n = 9;
    Eigen::MatrixXd A(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = g(rng);
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n), s0 = Eigen::VectorXd::Zero(n), y0(m);
    for (int j = 0; j < n; ++j) (j < m ? x0 : s0)[j] = u(rng);
    for (int i = 0; i < m; ++i) y0[i] = g(rng);
    ConicProgram p;
    p.c = A.transpose() * y0 + s0;
    p.A = A.sparseView();
    p.b = A * x0;
    p.cones = {{ConeType::nonnegative, n}};
    const Solution s = ipm().solve(p, {});
    ASSERT_TRUE(s.optimal());
    EXPECT_NEAR(s.objective, p.c.dot(x0), 1e-7 * (1.0 + std::abs(p.c.dot(x0))));
  }
}
