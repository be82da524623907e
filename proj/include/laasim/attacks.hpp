#pragma once

#include <optional>
#include <vector>

#include "laasim/grid_model.hpp"
#include "laasim/netem.hpp"

namespace laasim {

struct SlaaSpec {
  std::vector<int> buses;
  std::vector<double> fractions;  // of each bus's nominal load
  double start_s = 30.0;
};

enum class GainUnit { PerHz, PerRadPerSecond };

struct DlaaSpec {
  std::vector<int> buses;
  std::vector<double> gains;  // pu per unit of frequency deviation
  GainUnit unit = GainUnit::PerHz;
  int sensed_generator = -1;  // -1: inertia-weighted system average
  double start_s = 30.0;
  double period_s = 0.01;     // actuation cadence
  bool continuous = false;    // sense the integrator stage state directly
};

void validate(const SlaaSpec& s, const BusIndex& idx);
void validate(const DlaaSpec& s, const BusIndex& idx, int n_gen);

/// epsilon per load bus (BusIndex::load_buses order).
Vector slaa_inject(const SlaaSpec& s, const BusIndex& idx, const std::vector<double>& nominal, double time);

/// Gain per load bus in pu/Hz (zero off-target).
Vector dlaa_gain_vector(const DlaaSpec& s, const BusIndex& idx);

/// Pre-saturation epsilon = -K * measured deviation (Hz) on targets once active.
Vector dlaa_inject(const DlaaSpec& s, const BusIndex& idx, double measured_dev_hz, double time);

/// Clips each entry to +-nominal_i * vulnerable_i.
Vector saturate(const Vector& raw, const std::vector<double>& nominal, const std::vector<double>& vulnerable);

/// Sensing weights over generators for a spec.
Vector sensing_weights(const DlaaSpec& s, const GridCase& c);

/// Sensed deviation in Hz from a frequency sample.
double sensed_dev_hz(const DlaaSpec& s, const FrequencySample& sample, const Vector& weights);

/// Closed-loop plant matrix with DLAA feedback on the plant's omega states.
Matrix dlaa_plant_matrix(const LinearPlant& p, const Vector& gains_per_hz, const Vector& sensing);

/// Stateful DLAA agent: holds the last injection across lost samples.
class DlaaAgent {
 public:
  DlaaAgent(DlaaSpec spec, const GridCase& c, const BusIndex& idx);

  void on_sample(const FrequencySample& sample);

  /// Injection to apply at `time` (zero before start).
  Vector injection(double time) const;

  /// Raw feedback as a function of a stage state (continuous mode).
  Vector feedback_from_state(const LinearPlant& p, const Vector& x) const;

  const DlaaSpec& spec() const { return spec_; }
  const Vector& weights() const { return weights_; }

 private:
  DlaaSpec spec_;
  const BusIndex* idx_;
  Vector weights_;
  Vector gains_;
  std::optional<double> last_dev_hz_;
};

struct CriticalGain {
  bool stable_throughout = false;
  double k_crit = 0.0;  // pu/Hz per targeted bus
  double tolerance = 1e-3;
  std::vector<std::pair<double, double>> table;  // (gain, spectral abscissa)
};

/// Smallest symmetric gain on `target_loads` (load-vector positions) whose
/// closed-loop spectral abscissa is positive, searched on [0, k_max].
CriticalGain predict_critical_gain(const LinearPlant& p, const std::vector<int>& target_loads, const Vector& sensing,
                                   double k_max, double tolerance = 1e-3, int table_points = 21);

}  // namespace laasim
