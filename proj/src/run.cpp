#include "gasnet/run.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "gasnet/errors.hpp"

namespace gasnet {

namespace fs = std::filesystem;

const char* to_string(RunMode mode) {
  switch (mode) {
    case RunMode::steady_state: return "steady-state";
    case RunMode::optimize: return "optimize";
    case RunMode::validate: return "validate";
    case RunMode::frontier: return "frontier";
    case RunMode::topology: return "topology";
  }
  return "?";
}

RunMode run_mode_from_string(const std::string& s) {
  for (auto m : {RunMode::steady_state, RunMode::optimize, RunMode::validate, RunMode::frontier,
                 RunMode::topology})
    if (s == to_string(m)) return m;
  throw ConfigError("unknown mode '" + s + "'");
}

void RunConfig::check() const {
  auto need = [](const fs::path& p, const char* what) {
    if (p.empty()) throw ConfigError(std::string(what) + " file is required");
    if (!fs::exists(p)) throw ConfigError(std::string(what) + " file not found: " + p.string());
  };
  need(network, "network");
  if (mode == RunMode::steady_state) {
    need(demand, "demand");
  } else {
    need(uncertainty, "uncertainty");
    if (!demand.empty()) need(demand, "demand");
  }
  if (!policy.empty()) need(policy, "policy");
  if (output.empty()) throw ConfigError("output location is required");
  if (samples < 1) throw ConfigError("sample count must be at least 1");
  if (mode == RunMode::frontier && alpha_rho.empty())
    throw ConfigError("frontier needs at least one alpha_rho value");
  for (double a : alpha_rho)
    if (!(a >= 0.0)) throw ConfigError("alpha_rho values must be nonnegative");
  distribution_from_string(distribution);
  controls.check();
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("crypto", "SHA-256 failed");
  std::ostringstream ss;
  for (unsigned int i = 0; i < len; ++i)
    ss << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return ss.str();
}

json RunConfig::canonical() const {
  auto digest = [](const fs::path& p) -> json {
    if (p.empty()) return nullptr;
    return sha256_hex(read_text(p));
  };
  json j;
  j["mode"] = to_string(mode);
  j["network"] = digest(network);
  j["uncertainty"] = mode == RunMode::steady_state ? json(nullptr) : digest(uncertainty);
  j["demand"] = digest(demand);
  j["policy"] = digest(policy);
  j["controls"] = {
      {"injection_cap", controls.injection_cap ? json(*controls.injection_cap) : json(nullptr)},
      {"variability_penalty", controls.variability_penalty},
      {"linepack_cap", controls.linepack_cap ? json(*controls.linepack_cap) : json(nullptr)},
      {"topology_mode", controls.topology_mode == TopologyMode::fixed ? "fixed" : "enumerate"}};
  j["double_sided"] = double_sided == DoubleSidedMode::exact ? "exact" : "split";
  j["solver"] = {{"name", solver.empty() ? "ipm" : solver},
                 {"max_iterations", settings.max_iterations},
                 {"feasibility_tolerance", settings.feasibility_tolerance},
                 {"gap_tolerance", settings.gap_tolerance}};
  if (mode == RunMode::validate) {
    j["samples"] = samples;
    j["seed"] = seed;
    j["distribution"] = distribution;
    j["deterministic"] = deterministic;
  }
  if (mode == RunMode::frontier) j["alpha_rho"] = alpha_rho;
  return j;
}

std::string config_hash(const RunConfig& config) { return sha256_hex(config.canonical().dump()); }

Instance prepare_instance(GasNetwork network, UncertaintyModel model,
                          std::optional<std::vector<double>> reference_pressures,
                          const StationaryOptions& options) {
  const auto violations = validate_network(network);
  if (!violations.empty()) {
    std::string msg = "invalid network:";
    for (const auto& v : violations)
      msg += " [" + v.field + (v.index >= 0 ? "[" + std::to_string(v.index) + "]" : "") + ": " +
             v.message + "]";
    throw ConfigError(msg);
  }
  if (network.reference() < 0) throw ConfigError("network has no reference node");
  Instance inst;
  inst.network = std::move(network);
  inst.model = std::move(model);
  inst.incidence = build_incidence(inst.network);
  const int T = inst.model.horizon();
  if (reference_pressures) {
    if (static_cast<int>(reference_pressures->size()) != T)
      throw DimensionError("reference pressure count does not match the horizon");
    inst.reference_pressures = *reference_pressures;
  } else {
    const auto& ref = inst.network.node(inst.network.reference());
    inst.reference_pressures.assign(T, 0.5 * (ref.pressure_min + ref.pressure_max));
  }
  std::vector<Eigen::VectorXd> mean;
  for (int t = 0; t < T; ++t) mean.push_back(inst.model.mean_extraction(t));
  inst.point = solve_stationary(inst.network, inst.incidence, mean, inst.reference_pressures, options);
  LinearizeOptions lo;
  lo.flow_floor = options.flow_floor;
  lo.closed_edges = options.closed_edges;
  inst.sens = linearize(inst.network, inst.point, lo);
  return inst;
}

Instance load_instance(const RunConfig& config) {
  GasNetwork net = network_from_json(read_json(config.network));
  UncertaintyModel model = uncertainty_from_json(read_json(config.uncertainty), net);
  std::optional<std::vector<double>> ref;
  if (!config.demand.empty()) {
    const Demand d = demand_from_json(read_json(config.demand), net);
    ref = d.reference_pressure;
  }
  StationaryOptions so;
  so.solver = config.settings;
  return prepare_instance(std::move(net), std::move(model), ref, so);
}

PlanResult solve_policy(const Instance& inst, const AssembleOptions& options,
                        const ConicSolver& solver, const SolverSettings& settings) {
  PlanResult r;
  r.program = assemble(inst.network, inst.incidence, inst.sens, inst.model,
                       inst.reference_pressures, options);
  r.solution = solver.solve(r.program.program, settings);
  if (r.solution.status == SolveStatus::primal_infeasible)
    throw InfeasibleError("policy program is infeasible");
  if (r.solution.status != SolveStatus::optimal)
    throw NumericalError(std::string("policy solve ended with status ") + to_string(r.solution.status));
  r.policy = decode_policy(r.program.index, r.solution.x, inst.model.horizon());
  return r;
}

PlanResult solve_deterministic_plan(const Instance& inst, const ConicSolver& solver,
                                    const SolverSettings& settings) {
  std::vector<Eigen::VectorXd> mean;
  for (int t = 0; t < inst.model.horizon(); ++t) mean.push_back(inst.model.mean_extraction(t));
  const UncertaintyModel det = UncertaintyModel::deterministic(mean);
  PlanResult r;
  r.program = assemble(inst.network, inst.incidence, inst.sens, det, inst.reference_pressures, {});
  r.solution = solver.solve(r.program.program, settings);
  if (r.solution.status != SolveStatus::optimal)
    throw InfeasibleError(std::string("deterministic plan ended with status ") +
                          to_string(r.solution.status));
  r.policy = decode_policy(r.program.index, r.solution.x, det.horizon());
  return r;
}

namespace {

json tagged(json j, const std::string& hash) {
  j["config_hash"] = hash;
  return j;
}

AssembleOptions assemble_options(const RunConfig& c) {
  AssembleOptions o;
  o.double_sided = c.double_sided;
  o.controls = c.controls;
  return o;
}

TopologyCatalog catalog_for(const Instance& inst, const RunConfig& c) {
  std::vector<Eigen::VectorXd> mean;
  for (int t = 0; t < inst.model.horizon(); ++t) mean.push_back(inst.model.mean_extraction(t));
  StationaryOptions so;
  so.solver = c.settings;
  return precompute_topologies(inst.network, inst.incidence, mean, inst.reference_pressures, so);
}

int execute(const RunConfig& c, const std::string& hash, std::ostream& out, std::ostream& log) {
  const auto solver = make_solver(c.solver);
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  if (c.mode == RunMode::steady_state) {
    GasNetwork net = network_from_json(read_json(c.network));
    const Demand d = demand_from_json(read_json(c.demand), net);
    const UncertaintyModel model = UncertaintyModel::deterministic(d.extraction);
    StationaryOptions so;
    so.solver = c.settings;
    const Instance inst = prepare_instance(std::move(net), model, d.reference_pressure, so);
    write_json(c.output, tagged(stationary_to_json(inst.point, inst.sens, inst.network), hash));
    log << "steady state: " << inst.point.iterations << " iterations, residual "
        << inst.point.weymouth_residual << '\n';
    out << json{{"status", "ok"}, {"mode", to_string(c.mode)}, {"config_hash", hash},
                {"output", c.output.string()}}.dump()
        << '\n';
    return 0;
  }

  const Instance inst = load_instance(c);
  fs::create_directories(c.output);
  json summary = {{"status", "ok"}, {"mode", to_string(c.mode)}, {"config_hash", hash}};

  switch (c.mode) {
    case RunMode::optimize: {
      PlanResult r;
      std::optional<TopologyCatalog> cat;
      if (c.controls.topology_mode == TopologyMode::enumerate) {
        cat = catalog_for(inst, c);
        auto tr = solve_with_topology(inst.network, inst.incidence, *cat, inst.model,
                                      assemble_options(c), *solver, c.settings);
        r.policy = std::move(tr.policy);
        r.solution = std::move(tr.solution);
        r.program = std::move(tr.program);
        summary["config_id"] = tr.best;
      } else {
        r = solve_policy(inst, assemble_options(c), *solver, c.settings);
      }
      write_json(c.output / "policy.json", tagged(policy_to_json(r.policy, inst.network), hash));
      write_json(c.output / "manifest.json", tagged(manifest_to_json(r.program.manifest), hash));
      json sol = solution_summary(r.solution);
      sol["expected_cost"] = r.program.objective.value(r.policy);
      sol["variability"] = variability_value(r.policy, inst.model);
      write_json(c.output / "solution.json", tagged(sol, hash));
      summary["objective"] = r.solution.objective;
      log << "optimize: " << to_string(r.solution.status) << " objective " << r.solution.objective
          << " in " << r.solution.iterations << " iterations\n";
      break;
    }
    case RunMode::validate: {
      PolicySet policy;
      if (!c.policy.empty()) {
        policy = policy_from_json(read_json(c.policy), inst.network);
      } else {
        policy = solve_policy(inst, assemble_options(c), *solver, c.settings).policy;
      }
      const Eigen::MatrixXd samples = sample(inst.model, c.samples, c.seed,
                                             distribution_from_string(c.distribution));
      const ValidationReport rep = evaluate(policy, inst.network, inst.incidence, inst.sens,
                                            inst.model, inst.reference_pressures, samples, false);
      json report = {{"stochastic", report_to_json(rep, true)}};
      if (c.deterministic) {
        const PlanResult plan = solve_deterministic_plan(inst, *solver, c.settings);
        const ValidationReport drep = evaluate(plan.policy, inst.network, inst.incidence, inst.sens,
                                               inst.model, inst.reference_pressures, samples, true);
        report["deterministic"] = report_to_json(drep, true);
        report["deterministic"]["planned_cost"] = plan.program.objective.value(plan.policy);
      }
      write_json(c.output / "report.json", tagged(report, hash));
      write_scenario_csv(c.output / "scenarios.csv", scenario_rows(policy, inst.model, samples), hash);
      summary["max_violation_frequency"] = rep.max_violation_frequency;
      log << "validate: " << c.samples << " samples, expected cost " << rep.expected_cost << '\n';
      break;
    }
    case RunMode::frontier: {
      const TopologyCatalog cat = catalog_for(inst, c);
      const auto rows = frontier(inst.network, inst.incidence, cat, inst.model, assemble_options(c),
                                 c.alpha_rho, *solver, c.settings, c.threads);
      write_frontier_csv(c.output / "frontier.csv", rows, hash);
      summary["rows"] = rows.size();
      log << "frontier: " << rows.size() << " rows\n";
      break;
    }
    case RunMode::topology: {
      const TopologyCatalog cat = catalog_for(inst, c);
      auto tr = solve_with_topology(inst.network, inst.incidence, cat, inst.model,
                                    assemble_options(c), *solver, c.settings);
      json j = catalog_to_json(cat, inst.network);
      for (const auto& o : tr.outcomes) {
        auto& e = j["configurations"][o.config_id];
        if (o.attempted) {
          e["status"] = to_string(o.status);
          e["objective"] = o.objective;
        } else if (!o.failure.empty()) {
          e["failure"] = o.failure;
        }
      }
      j["best"] = tr.best;
      j["best_valve_bits"] = cat.configs[tr.best].bits();
      j["objective"] = tr.objective;
      write_json(c.output / "topology.json", tagged(j, hash));
      write_json(c.output / "policy.json", tagged(policy_to_json(tr.policy, inst.network), hash));
      summary["config_id"] = tr.best;
      log << "topology: best configuration " << tr.best << " objective " << tr.objective << '\n';
      break;
    }
    case RunMode::steady_state: break;
  }
  summary["seconds"] = elapsed();
  out << summary.dump() << '\n';
  return 0;
}

}  // namespace

int run(const RunConfig& config, std::ostream& out, std::ostream& log) {
  std::string hash;
  try {
    config.check();
    hash = config_hash(config);
    return execute(config, hash, out, log);
  } catch (const std::exception& e) {
    json err = {{"status", "error"}, {"mode", to_string(config.mode)}, {"message", e.what()}};
    const auto* ge = dynamic_cast<const Error*>(&e);
    err["kind"] = ge ? ge->kind() : "internal";
    if (const auto* ce = dynamic_cast<const ConvergenceError*>(&e)) err["last_residual"] = ce->last_residual;
    err["config_hash"] = hash.empty() ? json(nullptr) : json(hash);
    out << err.dump() << '\n';
    try {
      if (!config.output.empty()) {
        const fs::path dir = config.mode == RunMode::steady_state ? config.output.parent_path()
                                                                  : config.output;
        if (dir.empty() || fs::is_directory(dir)) write_json(dir / "error.json", err);
      }
    } catch (...) {
    }
    return ge && (ge->kind() == "config" || ge->kind() == "parse") ? 2 : 1;
  }
}

}  // namespace gasnet
