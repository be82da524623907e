#include "laasim/scenario.hpp"

#include <cmath>

#include "json_fields.hpp"
#include "laasim/case_io.hpp"
#include "laasim/errors.hpp"

namespace laasim {

using nlohmann::json;
using Fields = detail::BasicFields<ConfigError>;

double AttackSpec::start_s() const {
  switch (kind) {
    case AttackKind::Slaa: return slaa.start_s;
    case AttackKind::Dlaa: return dlaa.start_s;
    case AttackKind::Mdlaa: return mdlaa.start_s;
    case AttackKind::None: break;
  }
  return 0.0;
}

NetProfile NetworkConfig::uplink_profile() const { return uplink.value_or(controller); }

NetProfile NetworkConfig::downlink_profile() const {
  if (downlink) return *downlink;
  NetProfile p = controller;
  p.seed = controller.seed + 1;
  return p;
}

const char* to_string(AttackKind k) {
  switch (k) {
    case AttackKind::Slaa: return "slaa";
    case AttackKind::Dlaa: return "dlaa";
    case AttackKind::Mdlaa: return "mdlaa";
    case AttackKind::None: break;
  }
  return "none";
}

GridCase scenario_case(const Scenario& s) {
  GridCase c = s.grid ? *s.grid : load_case(resolve_case_path(s.case_ref));
  if (s.governor_lag) {
    for (auto& g : c.generators) g.lag.enabled = *s.governor_lag;
  }
  return c;
}

void validate(const Scenario& s, const GridCase& c) {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  need(s.dt_s > 0.0 && std::isfinite(s.dt_s), "dt must be > 0");
  need(s.duration_s > 0.0 && std::isfinite(s.duration_s), "duration must be > 0");
  need(s.measure_period_s >= s.dt_s, "measurement period must be >= dt");
  need(s.attack.kind == AttackKind::None || s.duration_s > s.attack.start_s(), "duration must exceed the attack start");
  const auto problems = laasim::validate(c);
  if (!problems.empty()) {
    std::string msg = "scenario '" + s.id + "' references an invalid case:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
  const auto idx = index_buses(c);
  validate(s.lfc);
  validate(s.ufls);
  if (s.ufls.source == UflsSource::Area) {
    bool found = false;
    for (const auto& a : c.areas) found = found || a.id == s.ufls.area;
    need(found, "ufls.area " + std::to_string(s.ufls.area) + " is not an area of the case");
  }
  validate(s.network.uplink_profile());
  validate(s.network.downlink_profile());
  validate(s.network.attacker);
  need(s.gridcode.long_dwell_s > 0.0 && s.gridcode.short_dwell_s > 0.0, "gridcode dwell limits must be > 0");
  need(s.outcome.tail_fraction > 0.0 && s.outcome.tail_fraction <= 1.0, "outcome.tail_fraction must lie in (0,1]");
  for (const auto& d : s.disturbances) {
    need(idx.is_load_bus(d.bus), "disturbance bus " + std::to_string(d.bus) + " is not a load bus");
    need(std::isfinite(d.delta_pu), "disturbance size must be finite");
  }
  switch (s.attack.kind) {
    case AttackKind::Slaa: validate(s.attack.slaa, idx); break;
    case AttackKind::Dlaa: validate(s.attack.dlaa, idx, idx.n_gen()); break;
    case AttackKind::Mdlaa: {
      const auto& m = s.attack.mdlaa;
      for (int b : m.buses) need(idx.is_load_bus(b), "mdlaa bus " + std::to_string(b) + " is not a load bus");
      for (int g : m.sensed_gens) need(g >= 0 && g < idx.n_gen(), "mdlaa sensed generator out of range");
      need(std::abs(std::remainder(m.sample_s, s.dt_s)) < 1e-9, "mdlaa sample period must be a multiple of dt");
      break;
    }
    case AttackKind::None: break;
  }
}

void override_seeds(Scenario& s, std::uint64_t seed) {
  s.network.controller.seed = seed;
  if (s.network.uplink) s.network.uplink->seed = seed;
  if (s.network.downlink) s.network.downlink->seed = seed + 1;
  s.network.attacker.seed = seed + 2;
  s.attack.mdlaa.excitation.seed = seed + 3;
}

namespace {

NetProfile read_profile(const Fields& f, NetProfile base) {
  base.delay_s = f.number("delay_ms", base.delay_s * 1e3) * 1e-3;
  base.jitter_s = f.number("jitter_ms", base.jitter_s * 1e3) * 1e-3;
  base.loss = f.number("loss", base.loss);
  base.seed = f.seed("seed", base.seed);
  f.reject_unknown();
  return base;
}

json write_profile(const NetProfile& p) {
  return {{"delay_ms", p.delay_s * 1e3}, {"jitter_ms", p.jitter_s * 1e3}, {"loss", p.loss}, {"seed", p.seed}};
}

std::vector<int> int_list(const Fields& f, const std::string& key) {
  std::vector<int> out;
  const auto& a = f.array(key);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number_integer()) f.fail(key, "expected integers");
    out.push_back(a[i].get<int>());
  }
  return out;
}

std::vector<double> number_list(const Fields& f, const std::string& key) {
  std::vector<double> out;
  const auto& a = f.array(key);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) f.fail(key, "expected numbers");
    out.push_back(a[i].get<double>());
  }
  return out;
}

AttackSpec read_attack(const Fields& f, const std::string& source) {
  AttackSpec a;
  const std::string type = f.text("type", "none");
  if (type == "none") {
    a.kind = AttackKind::None;
  } else if (type == "slaa") {
    a.kind = AttackKind::Slaa;
    a.slaa.buses = int_list(f, "buses");
    a.slaa.fractions = number_list(f, "fractions");
    a.slaa.start_s = f.number("start_s", 30.0);
  } else if (type == "dlaa") {
    a.kind = AttackKind::Dlaa;
    auto& d = a.dlaa;
    d.buses = int_list(f, "buses");
    d.gains = number_list(f, "gains");
    const std::string unit = f.text("unit", "pu_per_hz");
    if (unit == "pu_per_hz") {
      d.unit = GainUnit::PerHz;
    } else if (unit == "pu_per_rad_s") {
      d.unit = GainUnit::PerRadPerSecond;
    } else {
      f.fail("unit", "expected 'pu_per_hz' or 'pu_per_rad_s'");
    }
    d.sensed_generator = f.integer("sensed_generator", -1);
    d.start_s = f.number("start_s", 30.0);
    d.period_s = f.number("period_ms", 10.0) * 1e-3;
    d.continuous = f.boolean("continuous", false);
  } else if (type == "mdlaa") {
    a.kind = AttackKind::Mdlaa;
    auto& m = a.mdlaa;
    m.budget_fraction = f.number("budget_fraction", m.budget_fraction);
    m.t_a = f.integer("t_a", m.t_a);
    m.t_ini = f.integer("t_ini", m.t_ini);
    m.n_ap = f.integer("n_ap", m.n_ap);
    m.n_ac = f.integer("n_ac", m.n_ac);
    m.order = f.integer("order", m.order);
    m.omega_ref_hz = f.number("omega_ref_hz", m.omega_ref_hz);
    m.q_weight = f.number("q", m.q_weight);
    m.r_weight = f.number("r", m.r_weight);
    m.lambda_scale = f.number("lambda_scale", m.lambda_scale);
    m.k_max = f.integer("k_max", m.k_max);
    m.sample_s = f.number("sample_ms", m.sample_s * 1e3) * 1e-3;
    m.start_s = f.number("start_s", m.start_s);
    m.literal_loop = f.boolean("literal_loop", m.literal_loop);
    m.max_iterations = f.integer("max_iterations", m.max_iterations);
    m.kkt_tolerance = f.number("kkt_tolerance", m.kkt_tolerance);
    if (f.has("replay_offline")) m.replay_offline = f.text("replay_offline", "");
    if (f.has("save_offline")) m.save_offline = f.text("save_offline", "");
    if (f.has("buses")) m.buses = int_list(f, "buses");
    if (f.has("sensed_generators")) m.sensed_gens = int_list(f, "sensed_generators");
    if (f.has("excitation")) {
      Fields e(f.raw("excitation"), f.at("excitation"), source);
      m.excitation.amplitude = e.number("amplitude", m.excitation.amplitude);
      m.excitation.f_min_hz = e.number("f_min_hz", m.excitation.f_min_hz);
      m.excitation.f_max_hz = e.number("f_max_hz", m.excitation.f_max_hz);
      m.excitation.sines_per_bus = e.integer("sines_per_bus", m.excitation.sines_per_bus);
      m.excitation.seed = e.seed("seed", m.excitation.seed);
      e.reject_unknown();
    }
  } else {
    f.fail("type", "expected one of none, slaa, dlaa, mdlaa");
  }
  f.reject_unknown();
  return a;
}

json write_attack(const AttackSpec& a) {
  json j;
  j["type"] = to_string(a.kind);
  switch (a.kind) {
    case AttackKind::Slaa:
      j["buses"] = a.slaa.buses;
      j["fractions"] = a.slaa.fractions;
      j["start_s"] = a.slaa.start_s;
      break;
    case AttackKind::Dlaa:
      j["buses"] = a.dlaa.buses;
      j["gains"] = a.dlaa.gains;
      j["unit"] = a.dlaa.unit == GainUnit::PerHz ? "pu_per_hz" : "pu_per_rad_s";
      j["sensed_generator"] = a.dlaa.sensed_generator;
      j["start_s"] = a.dlaa.start_s;
      j["period_ms"] = a.dlaa.period_s * 1e3;
      j["continuous"] = a.dlaa.continuous;
      break;
    case AttackKind::Mdlaa: {
      const auto& m = a.mdlaa;
      j["budget_fraction"] = m.budget_fraction;
      j["t_a"] = m.t_a;
      j["t_ini"] = m.t_ini;
      j["n_ap"] = m.n_ap;
      j["n_ac"] = m.n_ac;
      j["order"] = m.order;
      j["omega_ref_hz"] = m.omega_ref_hz;
      j["q"] = m.q_weight;
      j["r"] = m.r_weight;
      j["lambda_scale"] = m.lambda_scale;
      j["k_max"] = m.k_max;
      j["sample_ms"] = m.sample_s * 1e3;
      j["start_s"] = m.start_s;
      j["literal_loop"] = m.literal_loop;
      j["max_iterations"] = m.max_iterations;
      j["kkt_tolerance"] = m.kkt_tolerance;
      if (m.replay_offline) j["replay_offline"] = m.replay_offline->string();
      if (m.save_offline) j["save_offline"] = m.save_offline->string();
      if (!m.buses.empty()) j["buses"] = m.buses;
      if (!m.sensed_gens.empty()) j["sensed_generators"] = m.sensed_gens;
      j["excitation"] = {{"amplitude", m.excitation.amplitude},
                         {"f_min_hz", m.excitation.f_min_hz},
                         {"f_max_hz", m.excitation.f_max_hz},
                         {"sines_per_bus", m.excitation.sines_per_bus},
                         {"seed", m.excitation.seed}};
      break;
    }
    case AttackKind::None: break;
  }
  return j;
}

}  // namespace

Scenario scenario_from_json(const json& doc, const std::string& source) {
  Fields top(doc, "", source);
  Scenario s;
  s.id = top.text("id", "");
  s.title = top.text("title", "");
  s.case_ref = top.text("case", s.case_ref);
  if (top.has("grid")) {
    try {
      s.grid = case_from_json(top.raw("grid"), source + ": grid");
    } catch (const CaseError& e) {
      throw ConfigError(e.what());
    }
  }
  s.duration_s = top.number("duration_s", s.duration_s);
  s.dt_s = top.number("dt_ms", s.dt_s * 1e3) * 1e-3;
  s.measure_period_s = top.number("measure_period_ms", s.measure_period_s * 1e3) * 1e-3;
  if (top.has("governor_lag")) s.governor_lag = top.boolean("governor_lag", false);

  if (top.has("lfc")) {
    Fields f(top.raw("lfc"), "lfc", source);
    s.lfc.enabled = f.boolean("enabled", false);
    s.lfc.gain_ks = f.number("gain_Ks", s.lfc.gain_ks);
    if (f.has("bias_beta")) s.lfc.bias_beta = f.number("bias_beta");
    s.lfc.period_s = f.number("period_ms", s.lfc.period_s * 1e3) * 1e-3;
    s.lfc.staleness_s = f.number("staleness_s", s.lfc.staleness_s);
    s.lfc.windup_limit = f.number("windup_limit", s.lfc.windup_limit);
    f.reject_unknown();
  }
  if (top.has("ufls")) {
    Fields f(top.raw("ufls"), "ufls", source);
    s.ufls.enabled = f.boolean("enabled", false);
    if (f.has("stages")) {
      s.ufls.stages.clear();
      const auto& st = f.array("stages");
      for (std::size_t i = 0; i < st.size(); ++i) {
        Fields e(st[i], "ufls.stages[" + std::to_string(i) + "]", source);
        s.ufls.stages.push_back({e.number("threshold_hz"), e.number("fraction")});
        e.reject_unknown();
      }
    }
    const std::string src = f.text("source", "system");
    if (src == "system") {
      s.ufls.source = UflsSource::SystemAverage;
    } else if (src == "area") {
      s.ufls.source = UflsSource::Area;
      s.ufls.area = f.integer("area");
    } else {
      f.fail("source", "expected 'system' or 'area'");
    }
    f.reject_unknown();
  }
  if (top.has("gridcode")) {
    Fields f(top.raw("gridcode"), "gridcode", source);
    s.gridcode.long_dwell_s = f.number("long_dwell_s", s.gridcode.long_dwell_s);
    s.gridcode.short_dwell_s = f.number("short_dwell_s", s.gridcode.short_dwell_s);
    f.reject_unknown();
  }
  if (top.has("attack")) s.attack = read_attack(Fields(top.raw("attack"), "attack", source), source);
  if (top.has("network")) {
    Fields f(top.raw("network"), "network", source);
    if (f.has("controller")) s.network.controller = read_profile(Fields(f.raw("controller"), "network.controller", source), s.network.controller);
    if (f.has("uplink")) s.network.uplink = read_profile(Fields(f.raw("uplink"), "network.uplink", source), s.network.uplink_profile());
    if (f.has("downlink")) {
      s.network.downlink = read_profile(Fields(f.raw("downlink"), "network.downlink", source), s.network.downlink_profile());
    }
    if (f.has("attacker")) s.network.attacker = read_profile(Fields(f.raw("attacker"), "network.attacker", source), s.network.attacker);
    f.reject_unknown();
  }
  if (top.has("disturbances")) {
    const auto& ds = top.array("disturbances");
    for (std::size_t i = 0; i < ds.size(); ++i) {
      Fields f(ds[i], "disturbances[" + std::to_string(i) + "]", source);
      Disturbance d;
      d.bus = f.integer("bus");
      d.delta_pu = f.number("delta_pu");
      d.start_s = f.number("start_s", 0.0);
      if (f.has("end_s")) d.end_s = f.number("end_s");
      f.reject_unknown();
      s.disturbances.push_back(d);
    }
  }
  if (top.has("outcome")) {
    Fields f(top.raw("outcome"), "outcome", source);
    s.outcome.off_nominal_hz = f.number("off_nominal_hz", s.outcome.off_nominal_hz);
    s.outcome.tail_fraction = f.number("tail_fraction", s.outcome.tail_fraction);
    s.outcome.post_violation_s = f.number("post_violation_s", s.outcome.post_violation_s);
    s.outcome.divergence_hz = f.number("divergence_hz", s.outcome.divergence_hz);
    f.reject_unknown();
  }
  top.reject_unknown();
  return s;
}

json scenario_to_json(const Scenario& s) {
  json j;
  j["id"] = s.id;
  j["title"] = s.title;
  if (s.grid) {
    j["grid"] = case_to_json(*s.grid);
  } else {
    j["case"] = s.case_ref;
  }
  j["duration_s"] = s.duration_s;
  j["dt_ms"] = s.dt_s * 1e3;
  j["measure_period_ms"] = s.measure_period_s * 1e3;
  if (s.governor_lag) j["governor_lag"] = *s.governor_lag;
  j["lfc"] = {{"enabled", s.lfc.enabled},
              {"gain_Ks", s.lfc.gain_ks},
              {"period_ms", s.lfc.period_s * 1e3},
              {"staleness_s", s.lfc.staleness_s},
              {"windup_limit", s.lfc.windup_limit}};
  if (s.lfc.bias_beta) j["lfc"]["bias_beta"] = *s.lfc.bias_beta;
  json stages = json::array();
  for (const auto& st : s.ufls.stages) stages.push_back({{"threshold_hz", st.threshold_hz}, {"fraction", st.fraction}});
  j["ufls"] = {{"enabled", s.ufls.enabled}, {"stages", stages},
               {"source", s.ufls.source == UflsSource::Area ? "area" : "system"}};
  if (s.ufls.source == UflsSource::Area) j["ufls"]["area"] = s.ufls.area;
  j["gridcode"] = {{"long_dwell_s", s.gridcode.long_dwell_s}, {"short_dwell_s", s.gridcode.short_dwell_s}};
  j["attack"] = write_attack(s.attack);
  j["network"] = {{"controller", write_profile(s.network.controller)}, {"attacker", write_profile(s.network.attacker)}};
  if (s.network.uplink) j["network"]["uplink"] = write_profile(*s.network.uplink);
  if (s.network.downlink) j["network"]["downlink"] = write_profile(*s.network.downlink);
  json ds = json::array();
  for (const auto& d : s.disturbances) {
    json e = {{"bus", d.bus}, {"delta_pu", d.delta_pu}, {"start_s", d.start_s}};
    if (d.end_s) e["end_s"] = *d.end_s;
    ds.push_back(e);
  }
  j["disturbances"] = ds;
  j["outcome"] = {{"off_nominal_hz", s.outcome.off_nominal_hz},
                  {"tail_fraction", s.outcome.tail_fraction},
                  {"post_violation_s", s.outcome.post_violation_s},
                  {"divergence_hz", s.outcome.divergence_hz}};
  return j;
}

Scenario load_scenario(const std::filesystem::path& path) {
  json doc;
  try {
    doc = read_json_file(path);
  } catch (const CaseError& e) {
    throw ConfigError(e.what());
  }
  return scenario_from_json(doc, path.string());
}

}  // namespace laasim
