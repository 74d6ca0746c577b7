#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace gasnet {

enum class EdgeKind { passive, compressor, control_valve };

const char* to_string(EdgeKind kind);
EdgeKind edge_kind_from_string(const std::string& s);

struct Node {
  std::string id;
  double pressure_min = 0.0;   // MPa
  double pressure_max = 0.0;   // MPa
  double injection_min = 0.0;
  double injection_max = 0.0;
  double cost_linear = 0.0;
  double cost_quadratic = 0.0;
  bool is_reference = false;
};

struct Edge {
  std::string from;
  std::string to;
  double friction = 1.0;
  double linepack_factor = 0.0;
  EdgeKind kind = EdgeKind::passive;
  double regulation_min = 0.0;  // MPa (files carry kPa)
  double regulation_max = 0.0;  // MPa
  double gas_factor = 0.0;
  double initial_linepack = 0.0;
  bool has_binary_valve = false;

  bool active() const { return kind != EdgeKind::passive; }
};

/// Static gas network data. Nodes are sorted by id and edges by (from, to)
/// when the network is constructed, so every matrix derived from it has a
/// reproducible row/column order. Immutable after construction.
class GasNetwork {
 public:
  GasNetwork() = default;

  /// Sorts and resolves endpoint indices; throws TopologyError for unknown
  /// endpoints or duplicate node ids. Self loops and antiparallel edges are
  /// rejected by build_incidence, numeric invariants by validate_network.
  GasNetwork(std::vector<Node> nodes, std::vector<Edge> edges);

  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Node& node(int n) const { return nodes_[n]; }
  const Edge& edge(int l) const { return edges_[l]; }
  /// -1 when no node is flagged as reference.
  int reference() const { return reference_; }
  int from_index(int l) const { return from_[l]; }
  int to_index(int l) const { return to_[l]; }

  std::optional<int> node_index(const std::string& id) const;
  std::optional<int> edge_index(const std::string& from, const std::string& to) const;

  std::vector<int> compressor_edges() const;
  std::vector<int> valve_edges() const;
  std::vector<int> active_edges() const;
  std::vector<int> binary_valve_edges() const;

  Eigen::VectorXd friction() const;
  Eigen::VectorXd linepack_factor() const;
  Eigen::VectorXd initial_linepack() const;
  Eigen::VectorXd cost_linear() const;
  Eigen::VectorXd cost_quadratic() const;

 private:
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<int> from_;
  std::vector<int> to_;
  int reference_ = -1;
};

struct IncidenceSet {
  Eigen::MatrixXd A;        // N x E, +1 at sending node, -1 at receiving node
  Eigen::MatrixXd A_plus;   // positive entries of A
  Eigen::MatrixXd A_minus;  // negative entries of A
  Eigen::MatrixXd B;        // regulation gas consumption
  Eigen::MatrixXd A_abs;    // |A|
};

IncidenceSet build_incidence(const GasNetwork& network);

struct Violation {
  std::string field;
  int index = -1;
  std::string message;
};

/// One entry per violated invariant; empty when the network is valid.
std::vector<Violation> validate_network(const GasNetwork& network);

/// True if the undirected graph over all edges except `removed` is connected.
bool is_connected(const GasNetwork& network, const std::vector<int>& removed = {});

}  // namespace gasnet
