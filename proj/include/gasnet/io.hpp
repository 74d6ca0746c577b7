#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "gasnet/applications.hpp"
#include "gasnet/ldr_program.hpp"
#include "gasnet/network.hpp"
#include "gasnet/steady_state.hpp"
#include "gasnet/uncertainty.hpp"
#include "gasnet/validation.hpp"

namespace gasnet {

using json = nlohmann::json;

json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j);
std::string read_text(const std::filesystem::path& path);

// Network files carry regulation bounds in kPa; the in-memory network uses MPa.
GasNetwork network_from_json(const json& j);
json network_to_json(const GasNetwork& network);

/// `delta` rows follow the sorted node order of `network` unless the file
/// gives `node_order`, in which case rows are permuted to match.
UncertaintyModel uncertainty_from_json(const json& j, const GasNetwork& network);
json uncertainty_to_json(const UncertaintyModel& model, const GasNetwork& network);

/// Mean nodal extraction per stage and the reference pressure (MPa) per stage.
struct Demand {
  std::vector<Eigen::VectorXd> extraction;
  std::vector<double> reference_pressure;
};

/// {"extraction": [{node id: value, ...} per stage], "reference_pressure": [...]}.
/// Nodes missing from a stage have zero extraction. A scalar reference
/// pressure applies to every stage.
Demand demand_from_json(const json& j, const GasNetwork& network);
json demand_to_json(const Demand& demand, const GasNetwork& network);

json stationary_to_json(const StationaryPoint& point, const Sensitivities& sens,
                        const GasNetwork& network);

json policy_to_json(const PolicySet& policy, const GasNetwork& network);
PolicySet policy_from_json(const json& j, const GasNetwork& network);

json solution_summary(const Solution& solution);
json manifest_to_json(const BuildManifest& manifest);
json report_to_json(const ValidationReport& report, bool include_frequencies = false);

void write_frontier_csv(const std::filesystem::path& path, const std::vector<FrontierRow>& rows,
                        const std::string& config_hash);
void write_scenario_csv(const std::filesystem::path& path, const std::vector<ScenarioRow>& rows,
                        const std::string& config_hash);

json catalog_to_json(const TopologyCatalog& catalog, const GasNetwork& network);

std::vector<double> parse_number_list(const std::string& text);

}  // namespace gasnet
