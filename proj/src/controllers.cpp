#include "laasim/controllers.hpp"

#include <algorithm>
#include <cmath>

#include "laasim/errors.hpp"

namespace laasim {

void validate(const LfcConfig& cfg) {
  if (!std::isfinite(cfg.gain_ks) || cfg.gain_ks < 0.0) throw ConfigError("lfc.gain_Ks must be >= 0");
  if (cfg.bias_beta && (!std::isfinite(*cfg.bias_beta) || *cfg.bias_beta < 0.0)) {
    throw ConfigError("lfc.bias_beta must be >= 0");
  }
  if (!(cfg.period_s > 0.0)) throw ConfigError("lfc.period_ms must be > 0");
  if (!(cfg.staleness_s > 0.0)) throw ConfigError("lfc.staleness_s must be > 0");
  if (!(cfg.windup_limit > 0.0)) throw ConfigError("lfc.windup_limit must be > 0");
}

IntegralUpdate integrate_ace(double accumulator, double ace, double dt, double limit) {
  if (!(dt > 0.0)) throw ParameterError("integrate_ace: dt must be > 0");
  const double raw = accumulator + ace * dt;
  const double held = std::clamp(raw, -limit, limit);
  return {held, held != raw};
}

std::vector<double> dispatch(double accumulator, double ks, const std::vector<double>& alpha) {
  std::vector<double> out(alpha.size());
  for (std::size_t j = 0; j < alpha.size(); ++j) out[j] = -ks * accumulator * alpha[j];
  return out;
}

AreaController::AreaController(const GridCase& c, int area, const LfcConfig& cfg)
    : area_(area), beta_(cfg.bias_beta.value_or(default_bias(c, area))), cfg_(cfg) {
  validate(cfg_);
  for (int g : generators_in_area(c, area)) {
    if (c.generators[g].alpha > 0.0) {
      gens_.push_back(g);
      alpha_.push_back(c.generators[g].alpha);
    }
  }
  setpoints_.assign(gens_.size(), 0.0);
}

bool AreaController::receive(const AreaMeasurement& m, double now) {
  if (m.timestamp > now + 1e-9) throw ContractError("measurement timestamp is ahead of the controller clock");
  const double newest = pending_ ? pending_->timestamp : last_time_.value_or(-1e300);
  if (m.timestamp <= newest) return false;
  pending_ = m;
  return true;
}

AreaController::Output AreaController::step(double now) {
  Output out;
  out.command.area = area_;
  out.command.timestamp = now;

  if (pending_) {
    const AreaMeasurement m = *pending_;
    pending_.reset();
    // First sample only anchors the integration clock.
    if (last_time_) {
      const auto upd = integrate_ace(accumulator_, compute_ace(m, beta_), m.timestamp - *last_time_, cfg_.windup_limit);
      accumulator_ = upd.accumulator;
      out.clamped = upd.clamped;
      setpoints_ = dispatch(accumulator_, cfg_.gain_ks, alpha_);
      out.updated = true;
    }
    last_time_ = m.timestamp;
    stale_reported_ = false;
  } else if (last_time_ && now - *last_time_ > cfg_.staleness_s && !stale_reported_) {
    out.stale = true;
    stale_reported_ = true;
  }
  for (std::size_t j = 0; j < gens_.size(); ++j) out.command.setpoints.emplace_back(gens_[j], setpoints_[j]);
  return out;
}

SetpointBank::SetpointBank(const GridCase& c) {
  for (const auto& g : c.generators) alpha_.push_back(g.alpha);
  values_.assign(alpha_.size(), 0.0);
}

void SetpointBank::apply(int generator, double value) {
  if (generator < 0 || generator >= static_cast<int>(values_.size())) {
    throw ParameterError("setpoint for unknown generator " + std::to_string(generator));
  }
  if (!std::isfinite(value)) throw ParameterError("setpoint must be finite");
  if (!(alpha_[generator] > 0.0)) {
    throw ParameterError("generator " + std::to_string(generator) + " does not participate in LFC");
  }
  values_[generator] = value;
}

void SetpointBank::apply(const SetpointCommand& cmd) {
  for (const auto& [g, v] : cmd.setpoints) apply(g, v);
}

double SetpointBank::total() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return s;
}

}  // namespace laasim
