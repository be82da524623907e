#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "laasim/attacks.hpp"
#include "laasim/cosim.hpp"
#include "laasim/scenario.hpp"

namespace laasim {

inline constexpr const char* kToolVersion = "0.1.0";

/// Columns: t_s, f_sys_hz, f_bus<id>_hz per generator bus, load_dev_pu,
/// attack_pu, setpoint_pu, shed_pct.
std::vector<std::string> trace_columns(const ScenarioResult& r);
void write_trace_csv(const ScenarioResult& r, std::ostream& out);

/// Outcome, verdict, channel statistics and the event log.
nlohmann::json result_json(const ScenarioResult& r);

/// Frequency plot with the grid-code band edges as horizontal lines.
std::string frequency_svg(const ScenarioResult& r, const std::string& title);

/// 64-bit FNV-1a over the canonical JSON form; stable across platforms.
std::uint64_t scenario_hash(const Scenario& s);
std::string hex64(std::uint64_t v);

struct RunManifest {
  std::string tool_version = kToolVersion;
  std::string scenario_id;
  std::string scenario_hash;
  std::vector<std::uint64_t> seeds;  // uplink, downlink, attacker, excitation
  std::vector<std::string> outputs;
  double wall_clock_s = 0.0;
};

RunManifest make_manifest(const Scenario& s);
nlohmann::json manifest_json(const RunManifest& m);

struct OutputPaths {
  std::filesystem::path trace, events, plot, manifest;
};

/// Writes trace CSV, event JSON, optional SVG and the manifest into `dir`,
/// named after the scenario id. Files appear only after all are rendered.
OutputPaths write_outputs(const Scenario& s, const ScenarioResult& r, const std::filesystem::path& dir, bool plot,
                          double wall_clock_s);

/// Critical-gain report with the abscissa-vs-gain table.
nlohmann::json calibration_json(const std::string& case_ref, const std::vector<int>& buses, const CriticalGain& cg);

}  // namespace laasim
