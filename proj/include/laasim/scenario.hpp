#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "laasim/attacks.hpp"
#include "laasim/controllers.hpp"
#include "laasim/grid_case.hpp"
#include "laasim/mdlaa.hpp"
#include "laasim/netem.hpp"
#include "laasim/protection.hpp"

namespace laasim {

/// Non-adversarial load step used to perturb the equilibrium.
struct Disturbance {
  int bus = 0;
  double delta_pu = 0.0;
  double start_s = 0.0;
  std::optional<double> end_s;
};

enum class AttackKind { None, Slaa, Dlaa, Mdlaa };

struct AttackSpec {
  AttackKind kind = AttackKind::None;
  SlaaSpec slaa;
  DlaaSpec dlaa;
  MdlaaConfig mdlaa;

  double start_s() const;
};

struct NetworkConfig {
  NetProfile controller{0.0, 0.0, 0.0, 11};
  std::optional<NetProfile> uplink;
  std::optional<NetProfile> downlink;
  NetProfile attacker{0.0, 0.0, 0.0, 13};

  NetProfile uplink_profile() const;
  NetProfile downlink_profile() const;
};

struct GridCodeConfig {
  double long_dwell_s = 1800.0;
  double short_dwell_s = 30.0;
};

struct OutcomeConfig {
  double off_nominal_hz = 0.01;
  double tail_fraction = 0.1;
  double post_violation_s = 5.0;  // keep simulating after a violation
  double divergence_hz = 20.0;
};

struct Scenario {
  std::string id;
  std::string title;
  std::string case_ref = "ieee39";
  std::optional<GridCase> grid;  // overrides case_ref when set
  double duration_s = 120.0;
  double dt_s = 0.01;
  double measure_period_s = 0.1;
  std::optional<bool> governor_lag;
  LfcConfig lfc;
  UflsConfig ufls;
  GridCodeConfig gridcode;
  AttackSpec attack;
  NetworkConfig network;
  std::vector<Disturbance> disturbances;
  OutcomeConfig outcome;
};

/// Loads the referenced case (or returns the inline one) with the lag
/// override applied.
GridCase scenario_case(const Scenario& s);

/// Throws ConfigError on any inconsistency with the case.
void validate(const Scenario& s, const GridCase& c);

/// Replaces every seed: uplink s, downlink s+1, attacker s+2, excitation s+3.
void override_seeds(Scenario& s, std::uint64_t seed);

Scenario scenario_from_json(const nlohmann::json& doc, const std::string& source = "<scenario>");
nlohmann::json scenario_to_json(const Scenario& s);
Scenario load_scenario(const std::filesystem::path& path);

const char* to_string(AttackKind k);

}  // namespace laasim
