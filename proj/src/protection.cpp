#include "laasim/protection.hpp"

#include <cmath>
#include <limits>

#include "laasim/errors.hpp"

namespace laasim {

void validate(const UflsConfig& cfg) {
  for (std::size_t i = 0; i < cfg.stages.size(); ++i) {
    const auto& s = cfg.stages[i];
    if (!std::isfinite(s.threshold_hz)) throw ConfigError("ufls stage threshold must be finite");
    if (!(s.fraction > 0.0 && s.fraction < 1.0)) throw ConfigError("ufls stage fraction must lie in (0,1)");
    if (i > 0 && !(s.threshold_hz < cfg.stages[i - 1].threshold_hz)) {
      throw ConfigError("ufls thresholds must be strictly decreasing");
    }
  }
}

UflsRelay::UflsRelay(UflsConfig cfg) : cfg_(std::move(cfg)) {
  validate(cfg_);
  latched_.assign(cfg_.stages.size(), false);
}

std::optional<ShedCommand> UflsRelay::evaluate(double frequency_hz, double time) {
  if (!std::isfinite(frequency_hz)) throw ParameterError("ufls: frequency must be finite");
  ShedCommand cmd;
  cmd.timestamp = time;
  for (std::size_t i = 0; i < cfg_.stages.size(); ++i) {
    if (latched_[i] || frequency_hz > cfg_.stages[i].threshold_hz) continue;
    latched_[i] = true;
    cmd.stages.push_back(static_cast<int>(i));
    cmd.fraction += cfg_.stages[i].fraction;
  }
  if (cmd.stages.empty()) return std::nullopt;
  return cmd;
}

int UflsRelay::latched_count() const {
  int n = 0;
  for (bool b : latched_) n += b ? 1 : 0;
  return n;
}

double UflsRelay::cumulative_fraction() const {
  double s = 0.0;
  for (std::size_t i = 0; i < latched_.size(); ++i) s += latched_[i] ? cfg_.stages[i].fraction : 0.0;
  return s;
}

LoadBook::LoadBook(std::vector<double> nominal) : nominal_(std::move(nominal)) {
  connected_.assign(nominal_.size(), 1.0);
  for (double p : nominal_) initial_total_ += p;
}

double LoadBook::connected_total() const {
  double s = 0.0;
  for (std::size_t i = 0; i < nominal_.size(); ++i) s += connected_[i] * nominal_[i];
  return s;
}

LoadBook::ShedResult LoadBook::apply_shed(double fraction) {
  ShedResult r;
  r.requested = fraction * initial_total_;
  const double current = connected_total();
  if (!(current > 0.0) || !(r.requested > 0.0)) {
    r.ignored = true;
    return r;
  }
  r.applied = std::min(r.requested, current);
  const double keep = 1.0 - r.applied / current;
  for (double& c : connected_) c *= keep;
  return r;
}

Vector LoadBook::deviation(const Vector& extra) const {
  Vector out(static_cast<Eigen::Index>(nominal_.size()));
  for (std::size_t i = 0; i < nominal_.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    out(k) = (connected_[i] - 1.0) * nominal_[i] + connected_[i] * extra(k);
  }
  return out;
}

bool GridCodeBand::contains(double f) const {
  const bool above = low_closed ? f >= low_hz : f > low_hz;
  const bool below = high_closed ? f <= high_hz : f < high_hz;
  return above && below;
}

std::vector<GridCodeBand> default_grid_code(double long_dwell_s, double short_dwell_s) {
  const double inf = std::numeric_limits<double>::infinity();
  return {
      {"continuous", 58.8, 60.5, true, true, inf},
      {"low-30min", 57.5, 58.8, true, false, long_dwell_s},
      {"high-30min", 60.5, 61.5, false, true, long_dwell_s},
      {"low-30s", 57.0, 57.5, true, false, short_dwell_s},
      {"high-30s", 61.5, 62.5, false, true, short_dwell_s},
      {"below-57.0", -inf, 57.0, true, false, 0.0},
      {"above-62.5", 62.5, inf, false, true, 0.0},
  };
}

GridCodeMonitor::GridCodeMonitor(std::vector<GridCodeBand> bands) : bands_(std::move(bands)) {
  dwell_.assign(bands_.size(), 0.0);
}

const Verdict& GridCodeMonitor::step(double frequency_hz, double dt, double time) {
  if (!(dt > 0.0)) throw ParameterError("gridcode_step: dt must be > 0");
  if (verdict_.violated) return verdict_;
  int hit = -1;
  for (std::size_t i = 0; i < bands_.size(); ++i) {
    if (hit < 0 && bands_[i].contains(frequency_hz)) {
      hit = static_cast<int>(i);
      dwell_[i] += dt;
    } else {
      dwell_[i] = 0.0;
    }
  }
  if (hit < 0) {
    // NaN or a gap in a custom table.
    verdict_ = {true, time, "out-of-table"};
  } else if (dwell_[hit] > bands_[hit].max_dwell_s + 1e-9) {
    verdict_ = {true, time, bands_[hit].name};
  }
  return verdict_;
}

Verdict judge_trace(const std::vector<double>& frequency_hz, double dt, std::vector<GridCodeBand> bands) {
  GridCodeMonitor mon(std::move(bands));
  double t = 0.0;
  for (std::size_t k = 0; k < frequency_hz.size(); ++k) {
    t = static_cast<double>(k + 1) * dt;
    if (mon.step(frequency_hz[k], dt, t).violated) break;
  }
  return mon.verdict();
}

}  // namespace laasim
