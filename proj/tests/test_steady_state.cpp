#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "common.hpp"
#include "gasnet/errors.hpp"
#include "gasnet/steady_state.hpp"

using namespace gasnet;
using namespace testing_support;

namespace {

// 1 -> 2, w = 1, no linepack.
GasNetwork single_pipe(double s = 0.0, double psi0 = 0.0) {
  return GasNetwork({make_node("1", 1.0, 5.0, 0.0, 10.0, 1.0, 0.1, true), make_node("2", 1.0, 5.0)},
                    {make_edge("1", "2", 1.0, s, psi0)});
}

const Instance& case48() {
  static const Instance inst = load_fixture("case48");
  return inst;
}

// Step that moves the head loss by about 0.1%.
double fd_step(double w, double up, double down) {
  const double g = std::abs(w * (up * up - down * down));
  return std::max(1e-10, std::min(1e-6, 1e-3 * g / (2.0 * w * std::max(std::abs(up), std::abs(down)))));
}

// Central differences of the Weymouth flow of edge l.
void fd_row(const GasNetwork& net, const StationaryPoint& pt, int t, int l, Eigen::VectorXd& d_rho,
            Eigen::VectorXd& d_kappa) {
  const auto& e = net.edge(l);
  const int n = net.from_index(l), m = net.to_index(l);
  const Eigen::VectorXd& rho = pt.pressure[t];
  const double k = pt.regulation[t][l];
  const double h = fd_step(e.friction, rho[n] + k, rho[m]);
  d_rho = Eigen::VectorXd::Zero(net.num_nodes());
  d_kappa = Eigen::VectorXd::Zero(net.num_edges());
  auto f = [&](double a, double b, double c) { return weymouth_flow(e.friction, a, b, c); };
  d_rho[n] = (f(rho[n] + h, rho[m], k) - f(rho[n] - h, rho[m], k)) / (2 * h);
  d_rho[m] = (f(rho[n], rho[m] + h, k) - f(rho[n], rho[m] - h, k)) / (2 * h);
  d_kappa[l] = (f(rho[n], rho[m], k + h) - f(rho[n], rho[m], k - h)) / (2 * h);
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1e-12, std::max(std::abs(a), std::abs(b))); }

}  // namespace

TEST(Weymouth, FlowSignAndValue) {
  EXPECT_DOUBLE_EQ(weymouth_flow(1.0, 3.0, std::sqrt(5.0), 0.0), 2.0);
  EXPECT_DOUBLE_EQ(weymouth_flow(1.0, std::sqrt(5.0), 3.0, 0.0), -2.0);
  EXPECT_DOUBLE_EQ(weymouth_flow(2.0, 1.0, 3.0, 2.0), 0.0);
  EXPECT_NEAR(weymouth_relative_residual(1.0, 2.0, 3.0, std::sqrt(5.0), 0.0), 0.0, 1e-15);
}

TEST(Stationary, SinglePipeClosedForm) {
  const GasNetwork net = single_pipe();
  const IncidenceSet inc = build_incidence(net);
  const StationaryPoint pt = solve_stationary(net, inc, {Eigen::Vector2d(0.0, 2.0)}, {3.0});
  ASSERT_EQ(pt.horizon(), 1);
  EXPECT_NEAR(pt.flow[0][0], 2.0, 1e-9);
  EXPECT_NEAR(pt.pressure[0][0], 3.0, 1e-12);
  EXPECT_NEAR(pt.pressure[0][1], std::sqrt(5.0), 1e-9);
  EXPECT_NEAR(pt.injection[0][0], 2.0, 1e-7);
  EXPECT_LE(pt.weymouth_residual, 1e-8);
}

TEST(Stationary, NoFlowFixedPoint) {
  // psi0 = s (rho + rho) / 2 at a flat profile of 4
  const GasNetwork net = single_pipe(0.5, 0.5 * 4.0);
  const IncidenceSet inc = build_incidence(net);
  const StationaryPoint pt =
      solve_stationary(net, inc, {Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()}, {4.0, 4.0});
  for (int t = 0; t < 2; ++t) {
    EXPECT_NEAR(pt.flow[t][0], 0.0, 1e-8);
    EXPECT_NEAR(pt.pressure[t][1], 4.0, 1e-8);
    EXPECT_NEAR(pt.regulation[t][0], 0.0, 1e-12);
  }
}

TEST(Stationary, InfeasibleDemand) {
  // delta_2 = 4 from rho_1 = 3 needs rho_2^2 = 9 - 16
  const GasNetwork net = single_pipe();
  const IncidenceSet inc = build_incidence(net);
  EXPECT_THROW(solve_stationary(net, inc, {Eigen::Vector2d(0.0, 4.0)}, {3.0}), Error);
}

TEST(Stationary, BundledFixturesResidual) {
  for (const char* f : {"single_pipe", "triangle"}) {
    const Instance inst = load_fixture(f);
    EXPECT_LE(inst.point.weymouth_residual, 1e-8) << f;
    EXPECT_LE(max_weymouth_residual(inst.network, inst.point), 1e-8) << f;
  }
  EXPECT_EQ(case48().point.horizon(), 5);
  EXPECT_LE(max_weymouth_residual(case48().network, case48().point), 1e-8);
}

TEST(Linearize, SinglePipeHandDerivative) {
  const GasNetwork net = single_pipe();
  StationaryPoint pt;
  pt.flow = {Eigen::VectorXd::Constant(1, 2.0)};
  pt.pressure = {Eigen::Vector2d(3.0, std::sqrt(5.0))};
  pt.regulation = {Eigen::VectorXd::Zero(1)};
  const Sensitivities s = linearize(net, pt);
  // J_phi = 4, J_rho = (6, -2 sqrt 5)
  EXPECT_NEAR(s.W1[0](0, 0), 6.0 / 4.0, 1e-14);
  EXPECT_NEAR(s.W1[0](0, 1), -2.0 * std::sqrt(5.0) / 4.0, 1e-14);
  EXPECT_NEAR(s.W2[0](0, 0), 6.0 / 4.0, 1e-14);
  EXPECT_NEAR(s.w0[0][0] + s.W1[0].row(0).dot(pt.pressure[0]), 2.0, 1e-12);
}

TEST(Linearize, StagnantEdgeWithoutFloor) {
  const GasNetwork net = single_pipe();
  StationaryPoint pt;
  pt.flow = {Eigen::VectorXd::Zero(1)};
  pt.pressure = {Eigen::Vector2d(3.0, 3.0)};
  pt.regulation = {Eigen::VectorXd::Zero(1)};
  LinearizeOptions opt;
  opt.flow_floor = 0.0;
  EXPECT_THROW(linearize(net, pt, opt), SingularJacobianError);
  opt.flow_floor = 1e-6;
  const Sensitivities s = linearize(net, pt, opt);
  EXPECT_TRUE(s.W1[0].allFinite());
}

TEST(Linearize, FiniteDifferences48) {
  const Instance& inst = case48();
  const GasNetwork& net = inst.network;
  double worst = 0.0;
  for (int t = 0; t < inst.point.horizon(); ++t)
    for (int l = 0; l < net.num_edges(); ++l) {
      Eigen::VectorXd dr, dk;
      fd_row(net, inst.point, t, l, dr, dk);
      for (int n = 0; n < net.num_nodes(); ++n) {
        if (dr[n] == 0.0 && inst.sens.W1[t](l, n) == 0.0) continue;
        worst = std::max(worst, rel(dr[n], inst.sens.W1[t](l, n)));
      }
      if (net.edge(l).active()) worst = std::max(worst, rel(dk[l], inst.sens.W2[t](l, l)));
    }
  EXPECT_LE(worst, 1e-4);
}

TEST(Linearize, KappaColumnsAtZeroRegulation) {
  const GasNetwork net({make_node("1", 1, 9, 0, 10, 1, 0, true), make_node("2", 1, 9), make_node("3", 1, 9)},
                       {make_edge("1", "2", 2.0), make_edge("2", "3", 3.0)});
  StationaryPoint pt;
  pt.pressure = {Eigen::Vector3d(6.0, 5.0, 4.0)};
  pt.regulation = {Eigen::Vector2d::Zero()};
  pt.flow = {Eigen::Vector2d(weymouth_flow(2.0, 6.0, 5.0, 0.0), weymouth_flow(3.0, 5.0, 4.0, 0.0))};
  const Sensitivities s = linearize(net, pt);
  for (int l = 0; l < 2; ++l) {
    Eigen::VectorXd dr, dk;
    fd_row(net, pt, 0, l, dr, dk);
    EXPECT_LE(rel(dk[l], s.W2[0](l, l)), 1e-4);
    EXPECT_EQ(s.W2[0](l, 1 - l), 0.0);
    const double w = net.edge(l).friction;
    EXPECT_NEAR(s.W2[0](l, l), 2.0 * w * pt.pressure[0][net.from_index(l)] / (2.0 * pt.flow[0][l]), 1e-12);
  }
}

TEST(Linearize, ExactnessOn48) {
  const Instance& inst = case48();
  for (int t = 0; t < inst.point.horizon(); ++t) {
    const Eigen::VectorXd lhs = inst.sens.w0[t] + inst.sens.W1[t] * inst.point.pressure[t] +
                                inst.sens.W2[t] * inst.point.regulation[t];
    EXPECT_LE((lhs - inst.point.flow[t]).lpNorm<Eigen::Infinity>(), 1e-9 * (1.0 + inst.point.flow[t].lpNorm<Eigen::Infinity>()));
  }
}

TEST(Stationary, ReferencePressures) {
  const Instance& inst = case48();
  const auto r = reference_pressures(inst.network, inst.point);
  ASSERT_EQ(r.size(), 5u);
  for (std::size_t t = 0; t < r.size(); ++t) EXPECT_DOUBLE_EQ(r[t], inst.reference_pressures[t]);
}
