#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "gasnet/conic.hpp"
#include "gasnet/run.hpp"

namespace testing_support {

inline std::string data_file(const std::string& name) {
  return std::string(GASNET_DATA_DIR) + "/" + name;
}

// Fixture by prefix: single_pipe, triangle or case48.
inline gasnet::RunConfig fixture_config(const std::string& prefix) {
  gasnet::RunConfig cfg;
  cfg.network = data_file(prefix + "_network.json");
  cfg.uncertainty = data_file(prefix + "_uncertainty.json");
  cfg.demand = data_file(prefix + "_demand.json");
  return cfg;
}

inline gasnet::Instance load_fixture(const std::string& prefix) {
  return gasnet::load_instance(fixture_config(prefix));
}

inline gasnet::Node make_node(const std::string& id, double pmin, double pmax, double qmin = 0.0,
                              double qmax = 0.0, double c1 = 0.0, double c2 = 0.0,
                              bool ref = false) {
  gasnet::Node n;
  n.id = id;
  n.pressure_min = pmin;
  n.pressure_max = pmax;
  n.injection_min = qmin;
  n.injection_max = qmax;
  n.cost_linear = c1;
  n.cost_quadratic = c2;
  n.is_reference = ref;
  return n;
}

inline gasnet::Edge make_edge(const std::string& from, const std::string& to, double w,
                              double s = 0.0, double psi0 = 0.0) {
  gasnet::Edge e;
  e.from = from;
  e.to = to;
  e.friction = w;
  e.linepack_factor = s;
  e.initial_linepack = psi0;
  return e;
}

// Default solver with the library settings.
inline const gasnet::ConicSolver& ipm() {
  static gasnet::InteriorPointSolver solver;
  return solver;
}

}  // namespace testing_support
