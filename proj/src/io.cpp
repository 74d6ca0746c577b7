#include "gasnet/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "gasnet/errors.hpp"

namespace gasnet {

namespace fs = std::filesystem;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

namespace {

const json& member(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + "." + key + ": missing field");
  return *it;
}

double as_number(const json& v, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "Infinity" || s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf" || s == "-Infinity") return -std::numeric_limits<double>::infinity();
  }
  throw ParseError(where + ": expected a number");
}

double number(const json& obj, const std::string& key, const std::string& where) {
  return as_number(member(obj, key, where), where + "." + key);
}

double number_or(const json& obj, const std::string& key, const std::string& where, double fallback) {
  if (!obj.contains(key)) return fallback;
  return as_number(obj[key], where + "." + key);
}

std::string text(const json& obj, const std::string& key, const std::string& where) {
  const json& v = member(obj, key, where);
  if (!v.is_string()) throw ParseError(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

bool flag_or(const json& obj, const std::string& key, const std::string& where, bool fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_boolean()) throw ParseError(where + "." + key + ": expected a boolean");
  return obj[key].get<bool>();
}

const json& array(const json& obj, const std::string& key, const std::string& where) {
  const json& v = member(obj, key, where);
  if (!v.is_array()) throw ParseError(where + "." + key + ": expected an array");
  return v;
}

json number_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return nullptr;
  return v;
}

Eigen::VectorXd vector_from(const json& v, const std::string& where) {
  if (!v.is_array()) throw ParseError(where + ": expected an array");
  Eigen::VectorXd out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    out[i] = as_number(v[i], where + "[" + std::to_string(i) + "]");
  return out;
}

Eigen::MatrixXd matrix_from(const json& v, const std::string& where, Eigen::Index rows = -1,
                            Eigen::Index cols = -1) {
  if (!v.is_array()) throw ParseError(where + ": expected an array of rows");
  const Eigen::Index r = static_cast<Eigen::Index>(v.size());
  if (rows >= 0 && r != rows)
    throw ParseError(where + ": expected " + std::to_string(rows) + " rows, got " + std::to_string(r));
  Eigen::Index c = cols;
  if (c < 0) c = r > 0 && v[0].is_array() ? static_cast<Eigen::Index>(v[0].size()) : 0;
  Eigen::MatrixXd M(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    const std::string w = where + "[" + std::to_string(i) + "]";
    const json& row = v[i];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != c)
      throw ParseError(w + ": expected " + std::to_string(c) + " entries");
    for (Eigen::Index j = 0; j < c; ++j) M(i, j) = as_number(row[j], w + "[" + std::to_string(j) + "]");
  }
  return M;
}

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number_json(v[i]));
  return a;
}

json matrix_json(const Eigen::MatrixXd& M) {
  json a = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) a.push_back(vector_json(M.row(i).transpose()));
  return a;
}

json edge_list(const GasNetwork& net) {
  json a = json::array();
  for (const auto& e : net.edges()) a.push_back(json::array({e.from, e.to}));
  return a;
}

json node_list(const GasNetwork& net) {
  json a = json::array();
  for (const auto& n : net.nodes()) a.push_back(n.id);
  return a;
}

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream ss;
  ss << std::setprecision(12) << v;
  return ss.str();
}

}  // namespace

GasNetwork network_from_json(const json& j) {
  const std::string root = "network";
  std::vector<Node> nodes;
  const json& jn = array(j, "nodes", root);
  for (std::size_t i = 0; i < jn.size(); ++i) {
    const std::string w = root + ".nodes[" + std::to_string(i) + "]";
    const json& o = jn[i];
    Node n;
    n.id = text(o, "id", w);
    n.pressure_min = number(o, "pressure_min", w);
    n.pressure_max = number(o, "pressure_max", w);
    n.injection_min = number(o, "injection_min", w);
    n.injection_max = number(o, "injection_max", w);
    n.cost_linear = number_or(o, "cost_linear", w, 0.0);
    n.cost_quadratic = number_or(o, "cost_quadratic", w, 0.0);
    n.is_reference = flag_or(o, "is_reference", w, false);
    nodes.push_back(n);
  }
  std::vector<Edge> edges;
  const json& je = array(j, "edges", root);
  for (std::size_t i = 0; i < je.size(); ++i) {
    const std::string w = root + ".edges[" + std::to_string(i) + "]";
    const json& o = je[i];
    Edge e;
    e.from = text(o, "from", w);
    e.to = text(o, "to", w);
    e.friction = number(o, "friction", w);
    e.linepack_factor = number_or(o, "linepack_factor", w, 0.0);
    const std::string kind = o.contains("kind") ? text(o, "kind", w) : "passive";
    try {
      e.kind = edge_kind_from_string(kind);
    } catch (const Error&) {
      throw ParseError(w + ".kind: unknown edge kind '" + kind + "'");
    }
    e.regulation_min = number_or(o, "regulation_min", w, 0.0) / 1000.0;
    e.regulation_max = number_or(o, "regulation_max", w, 0.0) / 1000.0;
    e.gas_factor = number_or(o, "gas_factor", w, 0.0);
    e.initial_linepack = number_or(o, "initial_linepack", w, 0.0);
    e.has_binary_valve = flag_or(o, "has_binary_valve", w, false);
    edges.push_back(e);
  }
  return GasNetwork(std::move(nodes), std::move(edges));
}

json network_to_json(const GasNetwork& net) {
  json j;
  j["nodes"] = json::array();
  for (const auto& n : net.nodes())
    j["nodes"].push_back({{"id", n.id},
                          {"pressure_min", number_json(n.pressure_min)},
                          {"pressure_max", number_json(n.pressure_max)},
                          {"injection_min", number_json(n.injection_min)},
                          {"injection_max", number_json(n.injection_max)},
                          {"cost_linear", n.cost_linear},
                          {"cost_quadratic", n.cost_quadratic},
                          {"is_reference", n.is_reference}});
  j["edges"] = json::array();
  for (const auto& e : net.edges())
    j["edges"].push_back({{"from", e.from},
                          {"to", e.to},
                          {"friction", e.friction},
                          {"linepack_factor", e.linepack_factor},
                          {"kind", to_string(e.kind)},
                          {"regulation_min", number_json(e.regulation_min * 1000.0)},
                          {"regulation_max", number_json(e.regulation_max * 1000.0)},
                          {"gas_factor", e.gas_factor},
                          {"initial_linepack", e.initial_linepack},
                          {"has_binary_valve", e.has_binary_valve}});
  return j;
}

UncertaintyModel uncertainty_from_json(const json& j, const GasNetwork& network) {
  const std::string root = "uncertainty";
  const json& jd = array(j, "stage_dims", root);
  std::vector<int> dims;
  for (std::size_t i = 0; i < jd.size(); ++i) {
    if (!jd[i].is_number_integer())
      throw ParseError(root + ".stage_dims[" + std::to_string(i) + "]: expected an integer");
    dims.push_back(jd[i].get<int>());
  }
  if (j.contains("horizon")) {
    if (!j["horizon"].is_number_integer()) throw ParseError(root + ".horizon: expected an integer");
    if (j["horizon"].get<int>() != static_cast<int>(dims.size()))
      throw ParseError(root + ".horizon: does not match the length of stage_dims");
  }
  int k = 0;
  std::vector<int> cumulative;
  for (int d : dims) cumulative.push_back(k += d);

  const Eigen::VectorXd mean = vector_from(member(j, "mean", root), root + ".mean");
  if (mean.size() != k)
    throw ParseError(root + ".mean: expected " + std::to_string(k) + " entries");
  const Eigen::MatrixXd cov = matrix_from(member(j, "covariance", root), root + ".covariance", k, k);

  std::vector<int> perm(network.num_nodes());
  for (int n = 0; n < network.num_nodes(); ++n) perm[n] = n;
  if (j.contains("node_order")) {
    const json& order = array(j, "node_order", root);
    if (static_cast<int>(order.size()) != network.num_nodes())
      throw ParseError(root + ".node_order: expected one entry per node");
    for (std::size_t i = 0; i < order.size(); ++i) {
      const std::string w = root + ".node_order[" + std::to_string(i) + "]";
      if (!order[i].is_string()) throw ParseError(w + ": expected a node id");
      auto idx = network.node_index(order[i].get<std::string>());
      if (!idx) throw ParseError(w + ": unknown node '" + order[i].get<std::string>() + "'");
      perm[i] = *idx;
    }
  }

  const json& jdelta = array(j, "delta", root);
  if (jdelta.size() != dims.size())
    throw ParseError(root + ".delta: expected one matrix per stage");
  std::vector<Eigen::MatrixXd> delta;
  for (std::size_t t = 0; t < dims.size(); ++t) {
    const std::string w = root + ".delta[" + std::to_string(t) + "]";
    const Eigen::MatrixXd raw = matrix_from(jdelta[t], w, network.num_nodes(), cumulative[t]);
    Eigen::MatrixXd D(raw.rows(), raw.cols());
    for (int i = 0; i < raw.rows(); ++i) D.row(perm[i]) = raw.row(i);
    delta.push_back(D);
  }

  const json& jr = member(j, "risk_individual", root);
  std::vector<double> risk;
  if (jr.is_array()) {
    if (jr.size() != dims.size())
      throw ParseError(root + ".risk_individual: expected one value per stage");
    for (std::size_t t = 0; t < jr.size(); ++t)
      risk.push_back(as_number(jr[t], root + ".risk_individual[" + std::to_string(t) + "]"));
  } else {
    risk.assign(dims.size(), as_number(jr, root + ".risk_individual"));
  }
  for (std::size_t t = 0; t < risk.size(); ++t)
    if (!(risk[t] > 0.0 && risk[t] < 1.0))
      throw ParseError(root + ".risk_individual: values must lie in (0, 1)");

  UncertaintyModel model(dims, mean, cov, delta, risk);
  if (j.contains("renewable")) {
    const json& jw = array(j, "renewable", root);
    if (jw.size() != dims.size())
      throw ParseError(root + ".renewable: expected one matrix per stage");
    for (std::size_t t = 0; t < jw.size(); ++t)
      model.renewable.push_back(
          matrix_from(jw[t], root + ".renewable[" + std::to_string(t) + "]", -1, cumulative[t]));
  }
  return model;
}

json uncertainty_to_json(const UncertaintyModel& model, const GasNetwork& network) {
  json j;
  j["horizon"] = model.horizon();
  j["stage_dims"] = model.stage_dims();
  j["mean"] = vector_json(model.mean());
  j["covariance"] = matrix_json(model.covariance());
  j["node_order"] = node_list(network);
  j["delta"] = json::array();
  for (const auto& D : model.extraction()) j["delta"].push_back(matrix_json(D));
  j["risk_individual"] = model.risk();
  if (!model.renewable.empty()) {
    j["renewable"] = json::array();
    for (const auto& W : model.renewable) j["renewable"].push_back(matrix_json(W));
  }
  return j;
}

Demand demand_from_json(const json& j, const GasNetwork& network) {
  const std::string root = "demand";
  Demand d;
  const json& je = array(j, "extraction", root);
  for (std::size_t t = 0; t < je.size(); ++t) {
    const std::string w = root + ".extraction[" + std::to_string(t) + "]";
    Eigen::VectorXd v = Eigen::VectorXd::Zero(network.num_nodes());
    if (je[t].is_object()) {
      for (auto it = je[t].begin(); it != je[t].end(); ++it) {
        auto idx = network.node_index(it.key());
        if (!idx) throw ParseError(w + "." + it.key() + ": unknown node");
        v[*idx] = as_number(it.value(), w + "." + it.key());
      }
    } else {
      v = vector_from(je[t], w);
      if (v.size() != network.num_nodes())
        throw ParseError(w + ": expected " + std::to_string(network.num_nodes()) + " entries");
    }
    d.extraction.push_back(v);
  }
  const json& jr = member(j, "reference_pressure", root);
  if (jr.is_array()) {
    if (jr.size() != je.size())
      throw ParseError(root + ".reference_pressure: expected one value per stage");
    for (std::size_t t = 0; t < jr.size(); ++t)
      d.reference_pressure.push_back(
          as_number(jr[t], root + ".reference_pressure[" + std::to_string(t) + "]"));
  } else {
    d.reference_pressure.assign(je.size(), as_number(jr, root + ".reference_pressure"));
  }
  return d;
}

json demand_to_json(const Demand& demand, const GasNetwork& network) {
  json j;
  j["extraction"] = json::array();
  for (const auto& v : demand.extraction) {
    json s = json::object();
    for (int n = 0; n < network.num_nodes(); ++n)
      if (v[n] != 0.0) s[network.node(n).id] = v[n];
    j["extraction"].push_back(s);
  }
  j["reference_pressure"] = demand.reference_pressure;
  return j;
}

json stationary_to_json(const StationaryPoint& p, const Sensitivities& sens,
                        const GasNetwork& network) {
  json j;
  j["nodes"] = node_list(network);
  j["edges"] = edge_list(network);
  j["iterations"] = p.iterations;
  j["weymouth_residual"] = p.weymouth_residual;
  j["closed_edges"] = p.closed_edges;
  j["stages"] = json::array();
  for (int t = 0; t < p.horizon(); ++t) {
    Eigen::VectorXd kpa = p.regulation[t] * 1000.0;
    j["stages"].push_back({{"stage", t + 1},
                           {"flow", vector_json(p.flow[t])},
                           {"pressure", vector_json(p.pressure[t])},
                           {"regulation_kpa", vector_json(kpa)},
                           {"flow_plus", vector_json(p.flow_plus[t])},
                           {"flow_minus", vector_json(p.flow_minus[t])},
                           {"linepack", vector_json(p.linepack[t])},
                           {"injection", vector_json(p.injection[t])},
                           {"w0", vector_json(sens.w0[t])},
                           {"W1", matrix_json(sens.W1[t])},
                           {"W2", matrix_json(sens.W2[t])}});
  }
  return j;
}

json policy_to_json(const PolicySet& policy, const GasNetwork& network) {
  json j;
  j["nodes"] = node_list(network);
  j["edges"] = edge_list(network);
  j["horizon"] = policy.horizon();
  j["stages"] = json::array();
  for (int t = 0; t < policy.horizon(); ++t) {
    json s;
    for (auto m : kPolicyMatrices) s[to_string(m)] = matrix_json(policy[m][t]);
    j["stages"].push_back(s);
  }
  return j;
}

PolicySet policy_from_json(const json& j, const GasNetwork& network) {
  const std::string root = "policy";
  const json& stages = array(j, "stages", root);
  if (j.contains("nodes") && j["nodes"] != node_list(network))
    throw ParseError(root + ".nodes: node order does not match the network");
  PolicySet p;
  for (std::size_t t = 0; t < stages.size(); ++t) {
    const std::string w = root + ".stages[" + std::to_string(t) + "]";
    Eigen::Index cols = -1;
    for (auto m : kPolicyMatrices) {
      const bool nodal = m == PolicyMatrix::injection || m == PolicyMatrix::pressure;
      const Eigen::Index rows = nodal ? network.num_nodes() : network.num_edges();
      Eigen::MatrixXd M = matrix_from(member(stages[t], to_string(m), w),
                                      w + "." + to_string(m), rows, cols);
      if (cols < 0) cols = M.cols();
      p[m].push_back(std::move(M));
    }
  }
  return p;
}

json solution_summary(const Solution& s) {
  return {{"status", to_string(s.status)},
          {"objective", number_json(s.objective)},
          {"dual_objective", number_json(s.dual_objective)},
          {"primal_residual", number_json(s.primal_residual)},
          {"dual_residual", number_json(s.dual_residual)},
          {"gap", number_json(s.gap)},
          {"relative_gap", number_json(s.relative_gap)},
          {"iterations", s.iterations},
          {"seconds", s.seconds}};
}

json manifest_to_json(const BuildManifest& m) {
  json controls;
  controls["injection_cap"] = m.controls.injection_cap ? json(*m.controls.injection_cap) : json(nullptr);
  controls["variability_penalty"] = m.controls.variability_penalty;
  controls["linepack_cap"] = m.controls.linepack_cap ? json(*m.controls.linepack_cap) : json(nullptr);
  controls["topology_mode"] = m.controls.topology_mode == TopologyMode::fixed ? "fixed" : "enumerate";
  return {{"variables",
           {{"policy", m.policy_variables},
            {"auxiliary", m.auxiliary_variables},
            {"total", m.total_variables}}},
          {"equalities", {{"total", m.equalities}, {"policy", m.policy_equalities}}},
          {"cones",
           {{"free", m.free_variables},
            {"nonnegative", {{"count", m.nonnegative_cones}, {"dim", m.nonnegative_dim}}},
            {"second_order", {{"count", m.second_order_cones}, {"dim", m.second_order_dim}}}}},
          {"chance_constraints", m.chance_constraints},
          {"risk_individual", m.risk},
          {"double_sided", m.double_sided},
          {"controls", controls},
          {"closed_edges", m.closed_edges}};
}

json report_to_json(const ValidationReport& r, bool include_frequencies) {
  json j = {{"samples", r.samples},
            {"expected_cost", r.expected_cost},
            {"expected_pressure_violation", r.pressure_violation_expected},
            {"worst_case_pressure_violation", r.pressure_violation_worst},
            {"expected_gas_mass_violation", r.mass_violation_expected},
            {"worst_case_gas_mass_violation", r.mass_violation_worst},
            {"first_stage_gas_injection", r.first_stage_injection},
            {"expected_compressor_deployment_kpa", r.compressor_deployment},
            {"expected_valve_deployment_kpa", r.valve_deployment},
            {"expected_compressor_deployment_abs_kpa", r.compressor_deployment_abs},
            {"expected_valve_deployment_abs_kpa", r.valve_deployment_abs},
            {"variability", r.variability},
            {"max_violation_frequency", r.max_violation_frequency},
            {"max_injection_std_ratio", r.max_injection_std_ratio},
            {"max_equality_residual", r.max_equality_residual}};
  if (include_frequencies) {
    json f = json::array();
    for (const auto& e : r.frequencies)
      if (e.frequency > 0.0)
        f.push_back({{"family", e.family}, {"index", e.index}, {"stage", e.stage + 1},
                     {"frequency", e.frequency}});
    j["violation_frequencies"] = f;
  }
  return j;
}

void write_frontier_csv(const fs::path& path, const std::vector<FrontierRow>& rows,
                        const std::string& config_hash) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "# config_hash=" << config_hash << '\n';
  out << "alpha_rho,config_id,valve_bits,expected_cost,variability_term,best,status\n";
  for (const auto& r : rows)
    out << csv_number(r.alpha_rho) << ',' << r.config_id << ',' << r.valve_bits << ','
        << csv_number(r.expected_cost) << ',' << csv_number(r.variability) << ','
        << (r.best ? 1 : 0) << ',' << r.status << '\n';
}

void write_scenario_csv(const fs::path& path, const std::vector<ScenarioRow>& rows,
                        const std::string& config_hash) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "# config_hash=" << config_hash << '\n';
  out << "stage,sample,renewable,extraction,pressure,regulation_abs\n";
  for (const auto& r : rows)
    out << r.stage << ',' << r.sample << ',' << csv_number(r.renewable) << ','
        << csv_number(r.extraction) << ',' << csv_number(r.pressure) << ','
        << csv_number(r.regulation_abs) << '\n';
}

json catalog_to_json(const TopologyCatalog& catalog, const GasNetwork& network) {
  json j;
  j["valve_edges"] = json::array();
  for (int l : catalog.valve_edges)
    j["valve_edges"].push_back(json::array({network.edge(l).from, network.edge(l).to}));
  j["configurations"] = json::array();
  for (const auto& c : catalog.configs) {
    json e = {{"config_id", c.id}, {"valve_bits", c.bits()}, {"feasible", c.feasible}};
    if (!c.feasible) e["failure"] = c.failure;
    else e["weymouth_residual"] = c.point.weymouth_residual;
    j["configurations"].push_back(e);
  }
  return j;
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("not a number: '" + item + "'");
    }
  }
  return out;
}

}  // namespace gasnet
