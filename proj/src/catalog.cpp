#include "laasim/catalog.hpp"

#include <functional>

#include "laasim/case_io.hpp"
#include "laasim/errors.hpp"

namespace laasim {

namespace {

const std::vector<int> kTargetBuses = {4, 20};

struct Protection {
  bool lfc = false;
  bool ufls = false;
  double delay_s = 0.0;
  double loss = 0.0;
};

Scenario variant(const std::string& id, const std::string& title, const std::string& case_ref, double duration,
                 const Protection& p) {
  Scenario s;
  s.id = id;
  s.title = title;
  s.case_ref = case_ref;
  s.duration_s = duration;
  s.lfc.enabled = p.lfc;
  s.ufls.enabled = p.ufls;
  s.network.controller.delay_s = p.delay_s;
  s.network.controller.loss = p.loss;
  return s;
}

std::string protection_label(const Protection& p) {
  std::string out = p.lfc && p.ufls ? "LFC + UFLS" : p.lfc ? "LFC" : p.ufls ? "UFLS" : "primary control only";
  if (p.delay_s > 0.0) out += ", " + std::to_string(static_cast<int>(p.delay_s * 1000.0 + 0.5)) + " ms delay";
  if (p.loss > 0.0) out += ", " + std::to_string(static_cast<int>(p.loss * 100.0 + 0.5)) + "% loss";
  return out;
}

CatalogScenario family(const std::string& id, const std::string& title, const std::string& case_ref, double duration,
                       const std::vector<Protection>& cases, const std::function<void(Scenario&)>& attack) {
  CatalogScenario cs{id, title, {}};
  for (std::size_t i = 0; i < cases.size(); ++i) {
    Scenario s = variant(id + "." + std::to_string(i + 1), title + " (" + protection_label(cases[i]) + ")", case_ref,
                         duration, cases[i]);
    attack(s);
    cs.variants.push_back(std::move(s));
  }
  return cs;
}

}  // namespace

CriticalGain catalog_critical_gain(const std::string& case_ref) {
  const GridCase c = load_case(resolve_case_path(case_ref));
  const LinearPlant plant = build_plant(c, PlantOptions{true});
  const BusIndex idx = index_buses(c);
  std::vector<int> targets;
  for (int bus : kTargetBuses) {
    if (!idx.is_load_bus(bus)) throw ConfigError("catalog case '" + case_ref + "' has no load bus " + std::to_string(bus));
    targets.push_back(idx.load_of_bus.at(bus));
  }
  return predict_critical_gain(plant, targets, inertia_weights(c), 200.0);
}

std::vector<CatalogScenario> scenario_catalog(const CatalogOptions& opt) {
  const Protection primary{}, lfc{true}, ufls{false, true}, both{true, true};
  auto with_delay = [](Protection p, double d) { p.delay_s = d; return p; };
  auto with_loss = [](Protection p, double l) { p.loss = l; return p; };

  std::optional<double> k_crit;
  auto gain = [&](const std::optional<double>& fixed, double multiple) {
    if (fixed) return *fixed;
    if (!k_crit) k_crit = catalog_critical_gain(opt.case_ref).k_crit;
    return multiple * *k_crit;
  };

  auto slaa = [](std::vector<double> fractions) {
    return [fractions](Scenario& s) {
      s.attack.kind = AttackKind::Slaa;
      s.attack.slaa = SlaaSpec{kTargetBuses, fractions, 30.0};
    };
  };
  auto dlaa = [](double k) {
    return [k](Scenario& s) {
      s.attack.kind = AttackKind::Dlaa;
      s.attack.dlaa.buses = kTargetBuses;
      s.attack.dlaa.gains = {k, k};
      s.attack.dlaa.start_s = 30.0;
      s.disturbances = {{4, 0.5, 30.0, 31.0}};
    };
  };
  auto mdlaa = [](double budget) {
    return [budget](Scenario& s) {
      s.attack.kind = AttackKind::Mdlaa;
      s.attack.mdlaa.budget_fraction = budget;
    };
  };

  const std::vector<Protection> dlaa_cases = {primary,           lfc,
                                              both,              with_delay(both, 0.5),
                                              with_delay(both, 1.0), with_loss(both, 0.2),
                                              with_loss(both, 0.5)};
  const double k_iii = gain(opt.gain_iii, opt.sub_critical);
  const double k_iv = gain(opt.gain_iv, opt.near_critical);

  std::vector<CatalogScenario> out;
  out.push_back(family("I", "Weak static attack", opt.case_ref, 300.0, {primary, lfc}, slaa({0.2, 0.2})));
  out.push_back(family("II", "Strong static attack", opt.case_ref, 300.0,
                       {primary, lfc, ufls, both, with_delay(ufls, 0.5), with_delay(ufls, 1.0)},
                       slaa({1.0, 0.76})));
  out.push_back(family("III", "Dynamic attack below the critical gain", opt.case_ref, 300.0, dlaa_cases, dlaa(k_iii)));
  out.push_back(family("IV", "Dynamic attack above the critical gain", opt.case_ref, 300.0, dlaa_cases, dlaa(k_iv)));
  out.push_back(family("V", "Measurement-based attack, moderate budget", opt.case_ref, 400.0, {primary, lfc},
                       mdlaa(opt.budget_v)));
  out.push_back(family("VI", "Measurement-based attack, large budget", opt.case_ref, 400.0, {primary, lfc, both},
                       mdlaa(opt.budget_vi)));
  return out;
}

Scenario catalog_scenario(const std::string& variant_id, const CatalogOptions& opt) {
  for (auto& cs : scenario_catalog(opt)) {
    for (auto& v : cs.variants) {
      if (v.id == variant_id) return v;
    }
  }
  throw ConfigError("unknown catalog scenario '" + variant_id + "'");
}

}  // namespace laasim
