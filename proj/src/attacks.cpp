#include "laasim/attacks.hpp"

#include <algorithm>
#include <cmath>

#include "laasim/errors.hpp"

namespace laasim {

namespace {

void check_targets(const std::vector<int>& buses, std::size_t n_values, const BusIndex& idx, const char* what) {
  if (buses.size() != n_values) {
    throw ConfigError(std::string(what) + ": one value per target bus is required");
  }
  for (int b : buses) {
    if (!idx.is_load_bus(b)) throw ConfigError(std::string(what) + ": bus " + std::to_string(b) + " is not a load bus");
  }
}

double to_per_hz(double gain, GainUnit unit) { return unit == GainUnit::PerHz ? gain : model_to_per_hz(gain); }

}  // namespace

void validate(const SlaaSpec& s, const BusIndex& idx) {
  check_targets(s.buses, s.fractions.size(), idx, "slaa");
  for (double f : s.fractions) {
    if (!std::isfinite(f) || f < 0.0) throw ConfigError("slaa: fractions must be >= 0");
  }
  if (!(s.start_s >= 0.0)) throw ConfigError("slaa: start must be >= 0");
}

void validate(const DlaaSpec& s, const BusIndex& idx, int n_gen) {
  check_targets(s.buses, s.gains.size(), idx, "dlaa");
  for (double k : s.gains) {
    if (!std::isfinite(k) || k < 0.0) throw ConfigError("dlaa: gains must be >= 0");
  }
  if (!(s.start_s >= 0.0)) throw ConfigError("dlaa: start must be >= 0");
  if (!(s.period_s > 0.0)) throw ConfigError("dlaa: period must be > 0");
  if (s.sensed_generator >= n_gen) throw ConfigError("dlaa: sensed generator out of range");
}

Vector slaa_inject(const SlaaSpec& s, const BusIndex& idx, const std::vector<double>& nominal, double time) {
  Vector eps = Vector::Zero(idx.n_load());
  if (!std::isfinite(time)) throw ParameterError("slaa_inject: time must be finite");
  if (time < s.start_s) return eps;
  for (std::size_t i = 0; i < s.buses.size(); ++i) {
    const int l = idx.load_of_bus.at(s.buses[i]);
    eps(l) += s.fractions[i] * nominal[l];
  }
  return eps;
}

Vector dlaa_gain_vector(const DlaaSpec& s, const BusIndex& idx) {
  Vector k = Vector::Zero(idx.n_load());
  for (std::size_t i = 0; i < s.buses.size(); ++i) k(idx.load_of_bus.at(s.buses[i])) += to_per_hz(s.gains[i], s.unit);
  return k;
}

Vector dlaa_inject(const DlaaSpec& s, const BusIndex& idx, double measured_dev_hz, double time) {
  if (time < s.start_s) return Vector::Zero(idx.n_load());
  return -dlaa_gain_vector(s, idx) * measured_dev_hz;
}

Vector saturate(const Vector& raw, const std::vector<double>& nominal, const std::vector<double>& vulnerable) {
  Vector out = raw;
  for (Eigen::Index i = 0; i < raw.size(); ++i) {
    const double cap = nominal[i] * vulnerable[i];
    out(i) = std::clamp(raw(i), -cap, cap);
  }
  return out;
}

Vector sensing_weights(const DlaaSpec& s, const GridCase& c) {
  if (s.sensed_generator < 0) return inertia_weights(c);
  Vector w = Vector::Zero(static_cast<Eigen::Index>(c.generators.size()));
  w(s.sensed_generator) = 1.0;
  return w;
}

double sensed_dev_hz(const DlaaSpec& s, const FrequencySample& sample, const Vector& weights) {
  if (s.sensed_generator >= 0) return sample.gen_dev_hz.at(s.sensed_generator);
  double v = 0.0;
  for (Eigen::Index g = 0; g < weights.size(); ++g) v += weights(g) * sample.gen_dev_hz.at(g);
  return v;
}

Matrix dlaa_plant_matrix(const LinearPlant& p, const Vector& gains_per_hz, const Vector& sensing) {
  const Matrix k = dlaa_gain_matrix(gains_per_hz, sensing) / kTwoPi;
  Matrix feedback = Matrix::Zero(p.n_load, p.dim());
  feedback.block(0, p.n_gen, p.n_load, p.n_gen) = -k;
  return p.a + p.b_load * feedback;
}

DlaaAgent::DlaaAgent(DlaaSpec spec, const GridCase& c, const BusIndex& idx)
    : spec_(std::move(spec)), idx_(&idx), weights_(sensing_weights(spec_, c)), gains_(dlaa_gain_vector(spec_, idx)) {
  validate(spec_, idx, static_cast<int>(c.generators.size()));
}

void DlaaAgent::on_sample(const FrequencySample& sample) { last_dev_hz_ = sensed_dev_hz(spec_, sample, weights_); }

Vector DlaaAgent::injection(double time) const {
  if (!last_dev_hz_) return Vector::Zero(idx_->n_load());
  return dlaa_inject(spec_, *idx_, *last_dev_hz_, time);
}

Vector DlaaAgent::feedback_from_state(const LinearPlant& p, const Vector& x) const {
  const double dev_hz = rad_to_hz(weights_.dot(x.segment(p.n_gen, p.n_gen)));
  return -gains_ * dev_hz;
}

CriticalGain predict_critical_gain(const LinearPlant& p, const std::vector<int>& target_loads, const Vector& sensing,
                                   double k_max, double tolerance, int table_points) {
  if (!(k_max > 0.0) || !(tolerance > 0.0)) throw ParameterError("predict_critical_gain: bad search range");
  Vector pattern = Vector::Zero(p.n_load);
  for (int l : target_loads) pattern(l) = 1.0;
  auto abscissa = [&](double k) { return spectral_abscissa(dlaa_plant_matrix(p, k * pattern, sensing), p.n_gen); };

  CriticalGain out;
  out.tolerance = tolerance;
  const int n = std::max(table_points, 2);
  for (int i = 0; i < n; ++i) {
    const double k = k_max * i / (n - 1);
    out.table.emplace_back(k, abscissa(k));
  }
  // First bracketing interval on the coarse grid, then bisection.
  std::size_t hi = 0;
  while (hi < out.table.size() && out.table[hi].second <= 0.0) ++hi;
  if (hi == out.table.size()) {
    out.stable_throughout = true;
    out.k_crit = k_max;
    return out;
  }
  if (hi == 0) {
    out.k_crit = 0.0;
    return out;
  }
  double lo_k = out.table[hi - 1].first;
  double hi_k = out.table[hi].first;
  while (hi_k - lo_k > tolerance) {
    const double mid = 0.5 * (lo_k + hi_k);
    (abscissa(mid) > 0.0 ? hi_k : lo_k) = mid;
  }
  out.k_crit = hi_k;
  return out;
}

}  // namespace laasim
