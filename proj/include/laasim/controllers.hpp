#pragma once

#include <optional>
#include <vector>

#include "laasim/grid_case.hpp"
#include "laasim/netem.hpp"

namespace laasim {

struct LfcConfig {
  bool enabled = false;
  double gain_ks = 0.25;
  std::optional<double> bias_beta;  // pu/Hz; default from the case
  double period_s = 0.1;
  double staleness_s = 5.0;
  double windup_limit = 20.0;
};

void validate(const LfcConfig& cfg);

/// ACE = dP_tie + beta * df
inline double compute_ace(const AreaMeasurement& m, double beta) { return m.tie_dev_pu + beta * m.freq_dev_hz; }

struct IntegralUpdate {
  double accumulator = 0.0;
  bool clamped = false;
};

/// accumulator += ace * dt, clamped to +-limit.
IntegralUpdate integrate_ace(double accumulator, double ace, double dt, double limit);

/// -Ks * accumulator * alpha_j for each participation factor.
std::vector<double> dispatch(double accumulator, double ks, const std::vector<double>& alpha);

/// Secondary controller of one area. Consumes measurements as they arrive
/// and integrates the ACE over the measurement timestamps it has actually
/// received, so lost frames leave the output unchanged.
class AreaController {
 public:
  AreaController(const GridCase& c, int area, const LfcConfig& cfg);

  /// Out-of-order or duplicate measurements (by timestamp) are discarded.
  /// Returns false when discarded. Throws ContractError for a timestamp
  /// ahead of `now`.
  bool receive(const AreaMeasurement& m, double now);

  struct Output {
    SetpointCommand command;
    bool stale = false;
    bool clamped = false;
    bool updated = false;
  };

  Output step(double now);

  int area() const { return area_; }
  double beta() const { return beta_; }
  double accumulator() const { return accumulator_; }
  const std::vector<int>& generators() const { return gens_; }
  const std::vector<double>& setpoints() const { return setpoints_; }

 private:
  int area_;
  double beta_;
  LfcConfig cfg_;
  std::vector<int> gens_;
  std::vector<double> alpha_;
  std::vector<double> setpoints_;
  double accumulator_ = 0.0;
  std::optional<AreaMeasurement> pending_;
  std::optional<double> last_time_;
  bool stale_reported_ = false;
};

/// Generator setpoint channel of the plant. Only LFC-driven generators
/// (alpha > 0) accept a setpoint.
class SetpointBank {
 public:
  explicit SetpointBank(const GridCase& c);

  /// Throws ParameterError for a non-participating generator or a
  /// non-finite value.
  void apply(int generator, double value);
  void apply(const SetpointCommand& cmd);

  const std::vector<double>& values() const { return values_; }
  double total() const;

 private:
  std::vector<double> alpha_;
  std::vector<double> values_;
};

}  // namespace laasim
