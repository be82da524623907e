#pragma once

#include <optional>
#include <string>
#include <vector>

#include "laasim/attacks.hpp"
#include "laasim/scenario.hpp"

namespace laasim {

struct CatalogScenario {
  std::string id;  // "I" .. "VI"
  std::string title;
  std::vector<Scenario> variants;  // ids "<id>.<n>"
};

struct CatalogOptions {
  std::string case_ref = "ieee39";
  /// DLAA gains for III and IV as multiples of the critical gain of the
  /// shipped case. Ignored when explicit gains are given.
  double sub_critical = 0.7;
  double near_critical = 1.2;
  /// Aggregate load budgets of the measurement-based attack in V and VI.
  double budget_v = 0.3;
  double budget_vi = 0.6;
  std::optional<double> gain_iii;  // explicit pu/Hz
  std::optional<double> gain_iv;
};

/// Critical symmetric DLAA gain (pu/Hz) on buses 4 and 20 of a case,
/// measured on the primary-only plant.
CriticalGain catalog_critical_gain(const std::string& case_ref = "ieee39");

std::vector<CatalogScenario> scenario_catalog(const CatalogOptions& opt = {});

/// Looks up "II.3" style ids. Throws ConfigError when unknown.
Scenario catalog_scenario(const std::string& variant_id, const CatalogOptions& opt = {});

}  // namespace laasim
