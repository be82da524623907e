#pragma once

#include <numbers>
#include <string>
#include <unordered_map>
#include <vector>

namespace laasim {

// Model units: angles in rad, rotor speed deviation in rad/s, power in pu on
// base_mva. Gains that act on frequency are stored per rad/s; the case file
// and every reporting boundary use Hz.
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline constexpr double hz_to_rad(double hz) { return hz * kTwoPi; }
inline constexpr double rad_to_hz(double rad) { return rad / kTwoPi; }
/// pu/Hz -> pu/(rad/s)
inline constexpr double per_hz_to_model(double gain) { return gain / kTwoPi; }
inline constexpr double model_to_per_hz(double gain) { return gain * kTwoPi; }

/// Optional first-order governor and turbine lags in the primary-control path.
struct GovernorLag {
  bool enabled = false;
  double t_gov = 0.2;
  double t_turb = 0.5;
};

struct Generator {
  int bus = 0;
  double m = 0.0;       // inertia, pu*s^2/rad
  double d = 0.0;       // damping, pu/(rad/s)
  double kp = 0.0;      // primary gain, pu/(rad/s)
  double ki = 0.0;      // in-matrix integral gain, pu/rad
  double droop_r = 0.0; // droop gain as given in the case file, pu/Hz
  double alpha = 0.0;   // LFC participation factor within its area
  GovernorLag lag;
};

struct Bus {
  int id = 0;
  int area = 0;
  double load = 0.0;        // nominal (secure + vulnerable) load, pu
  double vulnerable = 0.0;  // vulnerable fraction of the load in [0,1]
};

struct Branch {
  int from = 0;
  int to = 0;
  double b = 0.0;  // series susceptance magnitude, pu
  double g = 0.0;  // series conductance, pu (diagnostics only)
};

struct Area {
  int id = 0;
  std::string name;
};

struct GridCase {
  std::string name;
  double nominal_hz = 60.0;
  double base_mva = 100.0;
  std::vector<Area> areas;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Generator> generators;
};

/// Generator buses ordered as the generator list; load buses are every other
/// bus in ascending id order. This ordering defines all matrix blocks.
struct BusIndex {
  std::vector<int> gen_buses;
  std::vector<int> load_buses;
  std::unordered_map<int, int> gen_of_bus;
  std::unordered_map<int, int> load_of_bus;
  std::unordered_map<int, int> position;  // index into GridCase::buses

  int n_gen() const { return static_cast<int>(gen_buses.size()); }
  int n_load() const { return static_cast<int>(load_buses.size()); }
  bool is_load_bus(int id) const { return load_of_bus.count(id) != 0; }
  bool is_gen_bus(int id) const { return gen_of_bus.count(id) != 0; }
};

BusIndex index_buses(const GridCase& c);

/// Returns one human readable line per violated invariant; empty when valid.
std::vector<std::string> validate(const GridCase& c);

/// Throws CaseError listing every violation.
void require_valid(const GridCase& c);

/// Nominal load per load bus, in BusIndex::load_buses order.
std::vector<double> nominal_loads(const GridCase& c, const BusIndex& idx);
std::vector<double> vulnerable_fractions(const GridCase& c, const BusIndex& idx);
double total_nominal_load(const GridCase& c);

/// Generators (indices) belonging to an area.
std::vector<int> generators_in_area(const GridCase& c, int area);

/// Frequency-bias default: sum of kp + d over the area's generators, pu/Hz.
double default_bias(const GridCase& c, int area);

}  // namespace laasim
