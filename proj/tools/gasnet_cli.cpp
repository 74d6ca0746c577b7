#include <iostream>

#include "CLI11.hpp"

#include "gasnet/errors.hpp"
#include "gasnet/run.hpp"

using namespace gasnet;

namespace {

// Stub config: stages, zones, wind_mean [zone][stage], wind_step [zone],
// units [{node, heat_rate, load [stage], participation [zone]}], variance,
// risk_individual and optional base demand {node: [per stage]}.
json stub_uncertainty(const json& cfg, const GasNetwork& net) {
  ZonalStub stub;
  stub.stages = cfg.at("stages").get<int>();
  stub.zones = cfg.at("zones").get<int>();
  stub.wind_mean = cfg.at("wind_mean").get<std::vector<std::vector<double>>>();
  stub.wind_step = cfg.at("wind_step").get<std::vector<double>>();
  const json& units = cfg.at("units");
  stub.participation.resize(units.size(), stub.zones);
  for (std::size_t m = 0; m < units.size(); ++m) {
    const std::string id = units[m].at("node").get<std::string>();
    auto idx = net.node_index(id);
    if (!idx) throw ParseError("stub.units[" + std::to_string(m) + "].node: unknown node '" + id + "'");
    stub.unit_nodes.push_back(*idx);
    stub.heat_rate.push_back(units[m].at("heat_rate").get<double>());
    stub.unit_load.push_back(units[m].at("load").get<std::vector<double>>());
    const auto share = units[m].at("participation").get<std::vector<double>>();
    for (int z = 0; z < stub.zones; ++z) stub.participation(m, z) = share.at(z);
  }
  const ZonalStubOutput o = zonal_balancing_stub(stub, net.num_nodes());
  auto delta = build_extraction_map(o.lambda, o.responses);
  if (cfg.contains("base_demand"))
    for (auto it = cfg["base_demand"].begin(); it != cfg["base_demand"].end(); ++it) {
      auto idx = net.node_index(it.key());
      if (!idx) throw ParseError("stub.base_demand." + it.key() + ": unknown node");
      const auto v = it.value().get<std::vector<double>>();
      for (int t = 0; t < stub.stages; ++t) delta[t](*idx, 0) += v.at(t);
    }
  int k = 0;
  for (int d : o.stage_dims) k += d;
  Eigen::VectorXd mean = Eigen::VectorXd::Ones(k);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(k, k) * cfg.at("variance").get<double>();
  cov(0, 0) = 0.0;
  const double risk = cfg.at("risk_individual").get<double>();
  UncertaintyModel model(o.stage_dims, mean, cov, delta, std::vector<double>(stub.stages, risk));
  model.renewable = o.renewable;
  return uncertainty_to_json(model, net);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear decision rule control of gas networks with linepack"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string network, uncertainty, demand, policy, output, alpha_list, topology = "fixed",
                                                                      double_sided = "exact";
  std::optional<double> injection_cap, linepack_cap;
  double variability = 0.0;

  auto common = [&](CLI::App* sub, bool stochastic) {
    sub->add_option("--network", network, "network JSON")->required()->check(CLI::ExistingFile);
    if (stochastic) {
      sub->add_option("--uncertainty", uncertainty, "uncertainty JSON")->required()->check(CLI::ExistingFile);
      sub->add_option("--demand", demand, "demand JSON with reference pressures")->check(CLI::ExistingFile);
      sub->add_option("--injection-cap", injection_cap, "injection std cap as a fraction of the mean");
      sub->add_option("--linepack-cap", linepack_cap, "linepack std cap as a fraction of the mean");
      sub->add_option("--variability-penalty", variability, "pressure variability weight");
      sub->add_option("--topology", topology, "fixed or enumerate")
          ->check(CLI::IsMember({"fixed", "enumerate"}));
      sub->add_option("--double-sided", double_sided, "exact or split")
          ->check(CLI::IsMember({"exact", "split"}));
      sub->add_option("--solver", cfg.solver, "solver backend (default: $GASNET_SOLVER or ipm)");
      sub->add_option("--max-iterations", cfg.settings.max_iterations, "solver iteration cap");
    }
  };

  auto* ss = app.add_subcommand("steady-state", "stationary point and sensitivities");
  common(ss, false);
  ss->add_option("--demand", demand, "demand JSON")->required()->check(CLI::ExistingFile);
  ss->add_option("--out", output, "output JSON file")->required();

  auto* opt = app.add_subcommand("optimize", "solve the policy program");
  common(opt, true);
  opt->add_option("--out", output, "output directory")->required();

  auto* val = app.add_subcommand("validate", "out-of-sample evaluation");
  common(val, true);
  val->add_option("--out", output, "output directory")->required();
  val->add_option("--policy", policy, "policy JSON to evaluate")->check(CLI::ExistingFile);
  val->add_option("--samples", cfg.samples, "Monte Carlo sample count");
  val->add_option("--seed", cfg.seed, "sampler seed");
  val->add_option("--distribution", cfg.distribution, "gaussian, uniform or student_t")
      ->check(CLI::IsMember({"gaussian", "uniform", "student_t"}));
  val->add_flag("--deterministic", cfg.deterministic, "also evaluate the recourse-free plan");

  auto* fr = app.add_subcommand("frontier", "cost/variability sweep over alpha_rho");
  common(fr, true);
  fr->add_option("--out", output, "output directory")->required();
  fr->add_option("--alpha-rho", alpha_list, "comma separated penalties")->default_val("0,10,50,100");
  fr->add_option("--threads", cfg.threads, "worker threads (0: hardware)");

  auto* tp = app.add_subcommand("topology", "binary valve enumeration");
  common(tp, true);
  tp->add_option("--out", output, "output directory")->required();

  std::string stub_path;
  auto* st = app.add_subcommand("stub-uncertainty", "zonal wind-balancing uncertainty generator");
  st->add_option("--network", network, "network JSON")->required()->check(CLI::ExistingFile);
  st->add_option("--stub", stub_path, "stub JSON")->required()->check(CLI::ExistingFile);
  st->add_option("--out", output, "uncertainty JSON to write")->required();

  CLI11_PARSE(app, argc, argv);

  if (st->parsed()) {
    try {
      const GasNetwork net = network_from_json(read_json(network));
      write_json(output, stub_uncertainty(read_json(stub_path), net));
      return 0;
    } catch (const std::exception& e) {
      const auto* ge = dynamic_cast<const Error*>(&e);
      std::cout << json{{"status", "error"}, {"kind", ge ? ge->kind() : "internal"},
                        {"message", e.what()}}.dump()
                << '\n';
      return 1;
    }
  }

  if (ss->parsed()) cfg.mode = RunMode::steady_state;
  if (opt->parsed()) cfg.mode = RunMode::optimize;
  if (val->parsed()) cfg.mode = RunMode::validate;
  if (fr->parsed()) cfg.mode = RunMode::frontier;
  if (tp->parsed()) cfg.mode = RunMode::topology;
  cfg.network = network;
  cfg.uncertainty = uncertainty;
  cfg.demand = demand;
  cfg.policy = policy;
  cfg.output = output;
  cfg.controls.injection_cap = injection_cap;
  cfg.controls.linepack_cap = linepack_cap;
  cfg.controls.variability_penalty = variability;
  cfg.controls.topology_mode = topology == "enumerate" ? TopologyMode::enumerate : TopologyMode::fixed;
  cfg.double_sided = double_sided == "split" ? DoubleSidedMode::split : DoubleSidedMode::exact;
  if (fr->parsed()) {
    try {
      cfg.alpha_rho = parse_number_list(alpha_list);
    } catch (const Error& e) {
      std::cout << json{{"status", "error"}, {"kind", e.kind()}, {"message", e.what()}}.dump() << '\n';
      return 2;
    }
  }
  return run(cfg, std::cout, std::cerr);
}
