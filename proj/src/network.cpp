#include "gasnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "gasnet/errors.hpp"

namespace gasnet {

const char* to_string(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::passive: return "passive";
    case EdgeKind::compressor: return "compressor";
    case EdgeKind::control_valve: return "control_valve";
  }
  return "passive";
}

EdgeKind edge_kind_from_string(const std::string& s) {
  if (s == "passive") return EdgeKind::passive;
  if (s == "compressor") return EdgeKind::compressor;
  if (s == "control_valve") return EdgeKind::control_valve;
  throw ParseError("unknown edge kind '" + s + "'");
}

GasNetwork::GasNetwork(std::vector<Node> nodes, std::vector<Edge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  std::sort(nodes_.begin(), nodes_.end(),
            [](const Node& a, const Node& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    if (nodes_[i].id == nodes_[i - 1].id)
      throw TopologyError("duplicate node id '" + nodes_[i].id + "'");
  }
  std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.from, a.to) < std::tie(b.from, b.to);
  });
  from_.resize(edges_.size());
  to_.resize(edges_.size());
  for (std::size_t l = 0; l < edges_.size(); ++l) {
    auto f = node_index(edges_[l].from);
    auto t = node_index(edges_[l].to);
    if (!f || !t)
      throw TopologyError("edge (" + edges_[l].from + "," + edges_[l].to +
                          ") references an unknown node");
    from_[l] = *f;
    to_[l] = *t;
  }
  for (std::size_t n = 0; n < nodes_.size(); ++n) {
    if (nodes_[n].is_reference && reference_ < 0) reference_ = static_cast<int>(n);
  }
}

std::optional<int> GasNetwork::node_index(const std::string& id) const {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id,
                             [](const Node& n, const std::string& v) { return n.id < v; });
  if (it == nodes_.end() || it->id != id) return std::nullopt;
  return static_cast<int>(it - nodes_.begin());
}

std::optional<int> GasNetwork::edge_index(const std::string& from, const std::string& to) const {
  for (std::size_t l = 0; l < edges_.size(); ++l)
    if (edges_[l].from == from && edges_[l].to == to) return static_cast<int>(l);
  return std::nullopt;
}

namespace {
template <class Pred>
std::vector<int> edges_where(const std::vector<Edge>& edges, Pred pred) {
  std::vector<int> out;
  for (std::size_t l = 0; l < edges.size(); ++l)
    if (pred(edges[l])) out.push_back(static_cast<int>(l));
  return out;
}
}  // namespace

std::vector<int> GasNetwork::compressor_edges() const {
  return edges_where(edges_, [](const Edge& e) { return e.kind == EdgeKind::compressor; });
}
std::vector<int> GasNetwork::valve_edges() const {
  return edges_where(edges_, [](const Edge& e) { return e.kind == EdgeKind::control_valve; });
}
std::vector<int> GasNetwork::active_edges() const {
  return edges_where(edges_, [](const Edge& e) { return e.active(); });
}
std::vector<int> GasNetwork::binary_valve_edges() const {
  return edges_where(edges_, [](const Edge& e) { return e.has_binary_valve; });
}

Eigen::VectorXd GasNetwork::friction() const {
  Eigen::VectorXd v(num_edges());
  for (int l = 0; l < num_edges(); ++l) v[l] = edges_[l].friction;
  return v;
}
Eigen::VectorXd GasNetwork::linepack_factor() const {
  Eigen::VectorXd v(num_edges());
  for (int l = 0; l < num_edges(); ++l) v[l] = edges_[l].linepack_factor;
  return v;
}
Eigen::VectorXd GasNetwork::initial_linepack() const {
  Eigen::VectorXd v(num_edges());
  for (int l = 0; l < num_edges(); ++l) v[l] = edges_[l].initial_linepack;
  return v;
}
Eigen::VectorXd GasNetwork::cost_linear() const {
  Eigen::VectorXd v(num_nodes());
  for (int n = 0; n < num_nodes(); ++n) v[n] = nodes_[n].cost_linear;
  return v;
}
Eigen::VectorXd GasNetwork::cost_quadratic() const {
  Eigen::VectorXd v(num_nodes());
  for (int n = 0; n < num_nodes(); ++n) v[n] = nodes_[n].cost_quadratic;
  return v;
}

IncidenceSet build_incidence(const GasNetwork& network) {
  const int N = network.num_nodes();
  const int E = network.num_edges();
  std::set<std::pair<int, int>> seen;
  for (int l = 0; l < E; ++l) {
    const int n = network.from_index(l);
    const int m = network.to_index(l);
    const auto& e = network.edge(l);
    if (n == m) throw TopologyError("self-loop edge (" + e.from + "," + e.to + ")");
    if (seen.count({m, n}))
      throw TopologyError("edges (" + e.from + "," + e.to + ") and (" + e.to + "," + e.from +
                          ") are antiparallel");
    if (!seen.insert({n, m}).second)
      throw TopologyError("duplicate edge (" + e.from + "," + e.to + ")");
  }

  IncidenceSet inc;
  inc.A = Eigen::MatrixXd::Zero(N, E);
  inc.A_plus = Eigen::MatrixXd::Zero(N, E);
  inc.A_minus = Eigen::MatrixXd::Zero(N, E);
  inc.B = Eigen::MatrixXd::Zero(N, E);
  for (int l = 0; l < E; ++l) {
    const int n = network.from_index(l);
    const int m = network.to_index(l);
    inc.A(n, l) = 1.0;
    inc.A(m, l) = -1.0;
    inc.A_plus(n, l) = 1.0;
    inc.A_minus(m, l) = -1.0;
    const auto& e = network.edge(l);
    if (e.kind == EdgeKind::compressor) inc.B(n, l) = e.gas_factor;
    if (e.kind == EdgeKind::control_valve) inc.B(m, l) = -e.gas_factor;
  }
  inc.A_abs = inc.A.cwiseAbs();
  return inc;
}

std::vector<Violation> validate_network(const GasNetwork& network) {
  std::vector<Violation> out;
  auto add = [&](std::string field, int idx, std::string msg) {
    out.push_back({std::move(field), idx, std::move(msg)});
  };

  int refs = 0;
  for (int n = 0; n < network.num_nodes(); ++n) {
    const auto& v = network.node(n);
    refs += v.is_reference ? 1 : 0;
    if (!(v.pressure_min <= v.pressure_max))
      add("pressure_min", n, "node " + v.id + ": pressure_min exceeds pressure_max");
    if (!(v.injection_min <= v.injection_max))
      add("injection_min", n, "node " + v.id + ": injection_min exceeds injection_max");
    if (!(v.cost_quadratic >= 0.0))
      add("cost_quadratic", n, "node " + v.id + ": quadratic cost must be nonnegative");
  }
  if (refs != 1)
    add("is_reference", -1,
        "exactly one reference node required, found " + std::to_string(refs));

  for (int l = 0; l < network.num_edges(); ++l) {
    const auto& e = network.edge(l);
    const std::string name = "edge (" + e.from + "," + e.to + ")";
    if (!(e.friction > 0.0)) add("friction", l, name + ": friction must be positive");
    if (!(e.linepack_factor >= 0.0))
      add("linepack_factor", l, name + ": linepack factor must be nonnegative");
    if (!(e.initial_linepack >= 0.0))
      add("initial_linepack", l, name + ": initial linepack must be nonnegative");
    if (!(e.regulation_min <= e.regulation_max))
      add("regulation_min", l, name + ": regulation_min exceeds regulation_max");
    switch (e.kind) {
      case EdgeKind::compressor:
        if (e.regulation_min < 0.0)
          add("regulation_min", l, name + ": compressor regulation_min must be >= 0");
        break;
      case EdgeKind::control_valve:
        if (e.regulation_max > 0.0)
          add("regulation_max", l, name + ": control valve regulation_max must be <= 0");
        break;
      case EdgeKind::passive:
        if (e.regulation_min != 0.0 || e.regulation_max != 0.0)
          add("regulation_min", l, name + ": passive edge must have zero regulation bounds");
        break;
    }
    if (e.active() && !(e.gas_factor >= 0.0))
      add("gas_factor", l, name + ": gas factor must be nonnegative");
  }
  return out;
}

bool is_connected(const GasNetwork& network, const std::vector<int>& removed) {
  const int N = network.num_nodes();
  if (N == 0) return true;
  std::vector<int> parent(N);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  int components = N;
  for (int l = 0; l < network.num_edges(); ++l) {
    if (std::find(removed.begin(), removed.end(), l) != removed.end()) continue;
    int a = find(network.from_index(l));
    int b = find(network.to_index(l));
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  return components == 1;
}

}  // namespace gasnet
