#include "laasim/case_io.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json_fields.hpp"
#include "laasim/errors.hpp"

namespace laasim {

using nlohmann::json;

using detail::Fields;

namespace {

std::pair<std::size_t, std::size_t> line_col(std::string_view text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

GovernorLag read_lag(const Fields& f, const std::string& key, const std::string& source) {
  GovernorLag lag;
  if (!f.has(key)) return lag;
  Fields l(f.raw(key), f.at(key), source);
  lag.enabled = l.boolean("enabled", true);
  lag.t_gov = l.number("t_gov", lag.t_gov);
  lag.t_turb = l.number("t_turb", lag.t_turb);
  l.reject_unknown();
  return lag;
}

}  // namespace

json parse_json_text(std::string_view text, const std::string& source) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_col(text, e.byte == 0 ? 0 : e.byte - 1);
    std::ostringstream os;
    os << source << ":" << line << ":" << col << ": JSON syntax error: " << e.what();
    throw CaseError(os.str());
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CaseError(path.string() + ": cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_json_text(buf.str(), path.string());
}

GridCase case_from_json(const json& doc, const std::string& source) {
  Fields top(doc, "", source);
  GridCase c;
  c.name = top.text("name", "");
  top.ignore("notes");
  c.nominal_hz = top.number("nominal_hz", 60.0);
  c.base_mva = top.number("base_mva", 100.0);
  const double f0 = c.nominal_hz;

  const auto& areas = top.array("areas");
  for (std::size_t i = 0; i < areas.size(); ++i) {
    Fields a(areas[i], "areas[" + std::to_string(i) + "]", source);
    c.areas.push_back({a.integer("id"), a.text("name", "")});
    a.reject_unknown();
  }

  const auto& buses = top.array("buses");
  for (std::size_t i = 0; i < buses.size(); ++i) {
    Fields b(buses[i], "buses[" + std::to_string(i) + "]", source);
    Bus bus;
    bus.id = b.integer("id");
    bus.area = b.integer("area");
    b.reject_unknown();
    c.buses.push_back(bus);
  }

  if (top.has("branches")) {
    const auto& branches = top.array("branches");
    for (std::size_t i = 0; i < branches.size(); ++i) {
      Fields b(branches[i], "branches[" + std::to_string(i) + "]", source);
      Branch br;
      br.from = b.integer("from");
      br.to = b.integer("to");
      const bool has_b = b.has("b");
      const bool has_x = b.has("x");
      if (has_b == has_x) b.fail("", "give exactly one of 'b' (susceptance) or 'x' (reactance)");
      const double r = b.number("r", 0.0);
      if (has_b) {
        br.b = b.number("b");
        br.g = b.number("g", 0.0);
      } else {
        const double x = b.number("x");
        if (x == 0.0 && r == 0.0) b.fail("x", "zero impedance");
        const double z2 = r * r + x * x;
        br.b = x / z2;
        br.g = r / z2;
      }
      b.reject_unknown();
      c.branches.push_back(br);
    }
  }

  const auto& gens = top.array("generators");
  for (std::size_t i = 0; i < gens.size(); ++i) {
    Fields g(gens[i], "generators[" + std::to_string(i) + "]", source);
    Generator gen;
    gen.bus = g.integer("bus");
    const bool has_h = g.has("h_s");
    const bool has_m = g.has("m");
    if (has_h == has_m) g.fail("", "give exactly one of 'h_s' (inertia constant) or 'm' (model inertia)");
    gen.m = has_h ? 2.0 * g.number("h_s") / (kTwoPi * f0) : g.number("m");
    gen.d = per_hz_to_model(g.number("d", 0.0));
    gen.droop_r = g.number("droop_r", 0.0);
    gen.kp = per_hz_to_model(g.has("kp") ? g.number("kp") : gen.droop_r);
    gen.ki = per_hz_to_model(g.number("ki", 0.0));
    gen.alpha = g.number("alpha", 0.0);
    gen.lag = read_lag(g, "lag", source);
    g.reject_unknown();
    c.generators.push_back(gen);
  }

  if (top.has("loads")) {
    std::map<int, std::size_t> pos;
    for (std::size_t i = 0; i < c.buses.size(); ++i) pos[c.buses[i].id] = i;
    const auto& loads = top.array("loads");
    for (std::size_t i = 0; i < loads.size(); ++i) {
      Fields l(loads[i], "loads[" + std::to_string(i) + "]", source);
      const int bus = l.integer("bus");
      auto it = pos.find(bus);
      if (it == pos.end()) l.fail("bus", "unknown bus " + std::to_string(bus));
      const bool has_mw = l.has("p_mw");
      const bool has_pu = l.has("p_pu");
      if (has_mw == has_pu) l.fail("", "give exactly one of 'p_mw' or 'p_pu'");
      auto& target = c.buses[it->second];
      target.load += has_mw ? l.number("p_mw") / c.base_mva : l.number("p_pu");
      target.vulnerable = l.number("vulnerable", 0.0);
      l.reject_unknown();
    }
  }
  top.reject_unknown();
  return c;
}

GridCase load_case(const std::filesystem::path& path) {
  return case_from_json(read_json_file(path), path.string());
}

json case_to_json(const GridCase& c) {
  json doc;
  doc["name"] = c.name;
  doc["nominal_hz"] = c.nominal_hz;
  doc["base_mva"] = c.base_mva;
  doc["areas"] = json::array();
  for (const auto& a : c.areas) doc["areas"].push_back({{"id", a.id}, {"name", a.name}});
  doc["buses"] = json::array();
  doc["loads"] = json::array();
  for (const auto& b : c.buses) {
    doc["buses"].push_back({{"id", b.id}, {"area", b.area}});
    if (b.load != 0.0 || b.vulnerable != 0.0) {
      doc["loads"].push_back({{"bus", b.id}, {"p_pu", b.load}, {"vulnerable", b.vulnerable}});
    }
  }
  doc["branches"] = json::array();
  for (const auto& br : c.branches) {
    doc["branches"].push_back({{"from", br.from}, {"to", br.to}, {"b", br.b}, {"g", br.g}});
  }
  doc["generators"] = json::array();
  for (const auto& g : c.generators) {
    json j = {{"bus", g.bus},
              {"m", g.m},
              {"d", model_to_per_hz(g.d)},
              {"kp", model_to_per_hz(g.kp)},
              {"ki", model_to_per_hz(g.ki)},
              {"droop_r", g.droop_r},
              {"alpha", g.alpha}};
    if (g.lag.enabled) j["lag"] = {{"enabled", true}, {"t_gov", g.lag.t_gov}, {"t_turb", g.lag.t_turb}};
    doc["generators"].push_back(j);
  }
  return doc;
}

std::filesystem::path resolve_case_path(const std::string& ref) {
  namespace fs = std::filesystem;
  if (fs::exists(ref)) return ref;
  const fs::path shipped = fs::path(LAASIM_DATA_DIR) / "cases" / (ref + ".json");
  if (fs::exists(shipped)) return shipped;
  throw CaseError("case not found: " + ref);
}

}  // namespace laasim
