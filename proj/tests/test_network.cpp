#include <gtest/gtest.h>

#include "common.hpp"
#include "gasnet/errors.hpp"
#include "gasnet/io.hpp"
#include "gasnet/network.hpp"

using namespace gasnet;
using namespace testing_support;

namespace {

GasNetwork two_nodes() {
  return GasNetwork({make_node("1", 1, 5, 0, 10, 1, 0, true), make_node("2", 1, 5)},
                    {make_edge("1", "2", 1.0)});
}

GasNetwork load48() { return network_from_json(read_json(data_file("case48_network.json"))); }

}  // namespace

TEST(Incidence, SmallestNetwork) {
  const IncidenceSet inc = build_incidence(two_nodes());
  Eigen::MatrixXd A(2, 1), Ap(2, 1), Am(2, 1);
  A << 1, -1;
  Ap << 1, 0;
  Am << 0, -1;
  EXPECT_EQ(inc.A, A);
  EXPECT_EQ(inc.A_plus, Ap);
  EXPECT_EQ(inc.A_minus, Am);
  EXPECT_EQ(inc.B, Eigen::MatrixXd::Zero(2, 1));
}

TEST(Incidence, CompressorConsumption) {
  Edge c = make_edge("1", "2", 1.0);
  c.kind = EdgeKind::compressor;
  c.regulation_max = 1.0;
  c.gas_factor = 0.01;
  GasNetwork net({make_node("1", 1, 5, 0, 10, 1, 0, true), make_node("2", 1, 5), make_node("3", 1, 5)},
                 {c, make_edge("2", "3", 1.0)});
  const IncidenceSet inc = build_incidence(net);
  EXPECT_EQ(inc.B.col(0), Eigen::Vector3d(0.01, 0, 0));
  EXPECT_EQ(inc.B.col(1), Eigen::Vector3d::Zero());
}

TEST(Incidence, ColumnScanOn48Nodes) {
  const GasNetwork net = load48();
  const IncidenceSet inc = build_incidence(net);
  ASSERT_EQ(inc.A.rows(), 48);
  for (int l = 0; l < net.num_edges(); ++l) {
    int plus = 0, minus = 0;
    for (int n = 0; n < 48; ++n) {
      const double a = inc.A(n, l);
      if (a == 1.0) ++plus;
      else if (a == -1.0) ++minus;
      else EXPECT_EQ(a, 0.0);
      const double d = inc.A_plus(n, l) - inc.A_minus(n, l);
      EXPECT_TRUE(d == 0.0 || d == 1.0);
    }
    EXPECT_EQ(plus, 1);
    EXPECT_EQ(minus, 1);
    EXPECT_EQ(inc.A.col(l).sum(), 0.0);
  }
  EXPECT_EQ(inc.A_abs, inc.A.cwiseAbs());
}

TEST(Incidence, RejectsSelfLoop) {
  GasNetwork net({make_node("1", 1, 5, 0, 1, 0, 0, true)}, {make_edge("1", "1", 1.0)});
  EXPECT_THROW(build_incidence(net), TopologyError);
}

TEST(Network, SortedOrder) {
  GasNetwork net({make_node("b", 1, 5), make_node("a", 1, 5, 0, 1, 0, 0, true)},
                 {make_edge("b", "a", 1.0)});
  EXPECT_EQ(net.node(0).id, "a");
  EXPECT_EQ(net.reference(), 0);
  EXPECT_EQ(net.from_index(0), 1);
  EXPECT_EQ(*net.node_index("b"), 1);
  EXPECT_FALSE(net.node_index("zz").has_value());
}

TEST(Network, UnknownEndpoint) {
  EXPECT_THROW(GasNetwork({make_node("a", 1, 5, 0, 1, 0, 0, true)}, {make_edge("a", "q", 1.0)}),
               TopologyError);
}

TEST(Validate, NegativeCompressorBound) {
  Edge c = make_edge("1", "2", 1.0);
  c.kind = EdgeKind::compressor;
  c.regulation_min = 0.0;
  c.regulation_max = -5.0;
  GasNetwork net({make_node("1", 1, 5, 0, 10, 1, 0, true), make_node("2", 1, 5)}, {c});
  const auto v = validate_network(net);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].index, 0);
}

TEST(Validate, ZeroFriction) {
  GasNetwork net({make_node("1", 1, 5, 0, 10, 1, 0, true), make_node("2", 1, 5)},
                 {make_edge("1", "2", 0.0)});
  const auto v = validate_network(net);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].field.find("friction"), std::string::npos);
}

TEST(Validate, BundledNetworksAreValid) {
  EXPECT_TRUE(validate_network(load48()).empty());
  for (const char* f : {"single_pipe_network.json", "triangle_network.json"})
    EXPECT_TRUE(validate_network(network_from_json(read_json(data_file(f)))).empty()) << f;
}

TEST(Validate, MissingReference) {
  GasNetwork net({make_node("1", 1, 5, 0, 10, 1, 0), make_node("2", 1, 5)}, {make_edge("1", "2", 1.0)});
  EXPECT_FALSE(validate_network(net).empty());
}

TEST(Connectivity, RemovingTheOnlyEdge) {
  const GasNetwork net = two_nodes();
  EXPECT_TRUE(is_connected(net));
  EXPECT_FALSE(is_connected(net, {0}));
}

TEST(Network, EdgeSetsOn48Nodes) {
  const GasNetwork net = load48();
  EXPECT_EQ(net.compressor_edges().size(), 6u);
  EXPECT_EQ(net.valve_edges().size(), 2u);
  EXPECT_EQ(net.binary_valve_edges().size(), 2u);
  EXPECT_EQ(net.active_edges().size(), 8u);
}
