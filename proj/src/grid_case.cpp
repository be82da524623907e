#include "laasim/grid_case.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "laasim/errors.hpp"

namespace laasim {

BusIndex index_buses(const GridCase& c) {
  BusIndex idx;
  for (std::size_t i = 0; i < c.buses.size(); ++i) idx.position[c.buses[i].id] = static_cast<int>(i);
  for (std::size_t g = 0; g < c.generators.size(); ++g) {
    const int bus = c.generators[g].bus;
    if (idx.gen_of_bus.count(bus) != 0) continue;
    idx.gen_of_bus[bus] = static_cast<int>(idx.gen_buses.size());
    idx.gen_buses.push_back(bus);
  }
  std::vector<int> ids;
  for (const auto& b : c.buses) {
    if (idx.gen_of_bus.count(b.id) == 0) ids.push_back(b.id);
  }
  std::sort(ids.begin(), ids.end());
  for (int id : ids) {
    idx.load_of_bus[id] = static_cast<int>(idx.load_buses.size());
    idx.load_buses.push_back(id);
  }
  return idx;
}

std::vector<std::string> validate(const GridCase& c) {
  std::vector<std::string> out;
  auto fail = [&out](const std::string& where, const std::string& what) {
    out.push_back(where + ": " + what);
  };
  auto finite = [](double v) { return std::isfinite(v); };

  if (!(c.nominal_hz > 0.0) || !finite(c.nominal_hz)) fail("nominal_hz", "must be a positive number");
  if (!(c.base_mva > 0.0) || !finite(c.base_mva)) fail("base_mva", "must be a positive number");
  if (c.generators.empty()) fail("generators", "at least one generator is required");

  std::set<int> area_ids;
  for (std::size_t i = 0; i < c.areas.size(); ++i) {
    if (!area_ids.insert(c.areas[i].id).second) {
      fail("areas[" + std::to_string(i) + "]", "duplicate area id " + std::to_string(c.areas[i].id));
    }
  }

  std::map<int, std::size_t> bus_pos;
  for (std::size_t i = 0; i < c.buses.size(); ++i) {
    const auto& b = c.buses[i];
    const std::string where = "buses[" + std::to_string(i) + "] (bus " + std::to_string(b.id) + ")";
    if (!bus_pos.emplace(b.id, i).second) fail(where, "duplicate bus id");
    if (area_ids.count(b.area) == 0) fail(where, "area " + std::to_string(b.area) + " is not declared");
    if (!finite(b.load) || b.load < 0.0) fail(where, "load must be finite and >= 0");
    if (!finite(b.vulnerable) || b.vulnerable < 0.0 || b.vulnerable > 1.0) {
      fail(where, "vulnerable fraction must lie in [0,1]");
    }
  }

  std::set<int> gen_bus_seen;
  for (std::size_t i = 0; i < c.generators.size(); ++i) {
    const auto& g = c.generators[i];
    const std::string where = "generators[" + std::to_string(i) + "] (bus " + std::to_string(g.bus) + ")";
    if (bus_pos.count(g.bus) == 0) fail(where, "references unknown bus");
    if (!gen_bus_seen.insert(g.bus).second) fail(where, "more than one generator on the bus");
    if (!finite(g.m) || !(g.m > 0.0)) fail(where, "inertia must be > 0");
    if (!finite(g.d) || g.d < 0.0) fail(where, "damping must be finite and >= 0");
    if (!finite(g.kp) || g.kp < 0.0) fail(where, "primary gain must be finite and >= 0");
    if (!finite(g.ki) || g.ki < 0.0) fail(where, "integral gain must be finite and >= 0");
    if (!finite(g.alpha) || g.alpha < 0.0 || g.alpha > 1.0) fail(where, "participation factor must lie in [0,1]");
    if (g.lag.enabled && (!(g.lag.t_gov > 0.0) || !(g.lag.t_turb > 0.0))) {
      fail(where, "governor and turbine time constants must be > 0");
    }
    auto it = bus_pos.find(g.bus);
    if (it != bus_pos.end() && c.buses[it->second].load != 0.0) {
      fail(where, "generator buses cannot carry load in the reduced model");
    }
  }

  for (std::size_t i = 0; i < c.branches.size(); ++i) {
    const auto& br = c.branches[i];
    const std::string where = "branches[" + std::to_string(i) + "] (" + std::to_string(br.from) + "-" +
                              std::to_string(br.to) + ")";
    if (bus_pos.count(br.from) == 0) fail(where, "dangling endpoint: unknown bus " + std::to_string(br.from));
    if (bus_pos.count(br.to) == 0) fail(where, "dangling endpoint: unknown bus " + std::to_string(br.to));
    if (br.from == br.to) fail(where, "self loop");
    if (!finite(br.b)) fail(where, "susceptance must be finite");
    if (!finite(br.g)) fail(where, "conductance must be finite");
  }

  for (const auto& a : c.areas) {
    double sum = 0.0;
    for (const auto& g : c.generators) {
      auto it = bus_pos.find(g.bus);
      if (it != bus_pos.end() && c.buses[it->second].area == a.id && g.alpha > 0.0) sum += g.alpha;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      std::ostringstream os;
      os << "participation factors sum to " << sum << ", expected 1";
      fail("areas (area " + std::to_string(a.id) + ")", os.str());
    }
  }
  return out;
}

void require_valid(const GridCase& c) {
  const auto problems = validate(c);
  if (problems.empty()) return;
  std::string msg = "invalid grid case";
  if (!c.name.empty()) msg += " '" + c.name + "'";
  for (const auto& p : problems) msg += "\n  " + p;
  throw CaseError(msg);
}

std::vector<double> nominal_loads(const GridCase& c, const BusIndex& idx) {
  std::vector<double> out(idx.load_buses.size(), 0.0);
  for (std::size_t l = 0; l < idx.load_buses.size(); ++l) {
    out[l] = c.buses[idx.position.at(idx.load_buses[l])].load;
  }
  return out;
}

std::vector<double> vulnerable_fractions(const GridCase& c, const BusIndex& idx) {
  std::vector<double> out(idx.load_buses.size(), 0.0);
  for (std::size_t l = 0; l < idx.load_buses.size(); ++l) {
    out[l] = c.buses[idx.position.at(idx.load_buses[l])].vulnerable;
  }
  return out;
}

double total_nominal_load(const GridCase& c) {
  double s = 0.0;
  for (const auto& b : c.buses) s += b.load;
  return s;
}

std::vector<int> generators_in_area(const GridCase& c, int area) {
  std::map<int, int> area_of;
  for (const auto& b : c.buses) area_of[b.id] = b.area;
  std::vector<int> out;
  for (std::size_t g = 0; g < c.generators.size(); ++g) {
    auto it = area_of.find(c.generators[g].bus);
    if (it != area_of.end() && it->second == area) out.push_back(static_cast<int>(g));
  }
  return out;
}

double default_bias(const GridCase& c, int area) {
  double beta = 0.0;
  for (int g : generators_in_area(c, area)) {
    beta += model_to_per_hz(c.generators[g].kp + c.generators[g].d);
  }
  return beta;
}

}  // namespace laasim
