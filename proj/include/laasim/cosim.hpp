#pragma once

#include <optional>
#include <string>
#include <vector>

#include "laasim/mdlaa.hpp"
#include "laasim/netem.hpp"
#include "laasim/protection.hpp"
#include "laasim/scenario.hpp"

namespace laasim {

enum class Outcome { Stable, OffNominalStable, Destabilized };

const char* to_string(Outcome o);

/// One row per measurement period. Frequencies are absolute, in Hz.
struct TraceSample {
  double t = 0.0;
  double f_sys_hz = 0.0;
  std::vector<double> f_gen_hz;
  double load_dev_pu = 0.0;   // total demand deviation seen by the grid
  double attack_pu = 0.0;     // total attack injection actually applied
  double setpoint_pu = 0.0;   // total LFC setpoint
  double shed_pct = 0.0;      // cumulative shed, % of initial load
};

struct Event {
  double t = 0.0;
  std::string kind;
  std::string detail;
};

struct MdlaaSummary {
  std::string status;  // running | target-reached | exhausted
  int applied = 0;
  int solves = 0;
  int relaxed = 0;
  double max_kkt = 0.0;
  int offline_samples = 0;
  int pe_rank = 0;
};

struct ScenarioResult {
  std::string id;
  Outcome outcome = Outcome::Stable;
  std::optional<double> destabilized_at;
  Verdict verdict;
  bool diverged = false;
  double end_time = 0.0;
  double steady_dev_hz = 0.0;
  double tail_peak_to_peak_hz = 0.0;
  int ufls_stages = 0;
  double shed_fraction = 0.0;
  std::vector<int> gen_buses;
  std::vector<TraceSample> trace;
  std::vector<Event> events;
  ChannelStats uplink, downlink, attacker;
  std::optional<MdlaaSummary> mdlaa;
};

struct RunOptions {
  /// Use this record instead of collecting or replaying offline data.
  const OfflineRecord* offline = nullptr;
};

/// Lockstep run. Per step: poll uplink and attacker channels, let the
/// controllers, relay and attacker consume frames and send, poll the
/// downlink and apply commands, integrate the grid, update the grid-code
/// monitor, publish measurements. Config errors throw before t = 0.
ScenarioResult run(const Scenario& s, const RunOptions& opt = {});

/// Offline phase of the measurement-based attack: runs the scenario plant
/// with a multi-sine injection from t = 0 and records (inputs, sensed
/// frequencies). Throws ConfigError when the excitation is not
/// persistently exciting.
OfflineRecord collect_offline(const Scenario& s);

/// Attack channel bounds p_max per attacked bus for a scenario.
std::vector<double> mdlaa_bounds(const Scenario& s, const GridCase& c);

struct SweepPoint {
  double value = 0.0;
  Outcome outcome = Outcome::Stable;
  std::optional<double> destabilized_at;
  int ufls_stages = 0;
};

struct SweepResult {
  std::string path;
  std::vector<SweepPoint> points;
  /// First value whose outcome is destabilized after a non-destabilized one.
  std::optional<double> threshold;
  /// Outcomes never improve as the value grows (stable < off-nominal < destabilized).
  bool monotone = true;
};

/// Sets a numeric field addressed by a dotted path in the scenario's JSON
/// form (e.g. "network.controller.delay_ms") to each value and runs it.
/// Points run on up to `workers` threads; results keep input order.
SweepResult sweep(const Scenario& s, const std::string& path, const std::vector<double>& values, int workers = 1);

/// Applies a dotted-path numeric override; throws ConfigError if the path
/// does not address a number.
Scenario with_override(const Scenario& s, const std::string& path, double value);

}  // namespace laasim
