#pragma once

#include <optional>
#include <string>
#include <vector>

#include "laasim/grid_model.hpp"
#include "laasim/netem.hpp"

namespace laasim {

struct UflsStage {
  double threshold_hz = 0.0;
  double fraction = 0.0;  // of initial total load
};

enum class UflsSource { SystemAverage, Area };

struct UflsConfig {
  bool enabled = false;
  std::vector<UflsStage> stages = {{59.5, 0.07}, {59.3, 0.07}, {59.1, 0.07}, {58.9, 0.07}};
  UflsSource source = UflsSource::SystemAverage;
  int area = 0;  // used with UflsSource::Area
};

/// Throws ConfigError unless thresholds strictly decrease and fractions lie in (0,1).
void validate(const UflsConfig& cfg);

/// Four-stage latching relay.
class UflsRelay {
 public:
  explicit UflsRelay(UflsConfig cfg);

  /// Latches every not-yet-latched stage whose threshold is >= f. Returns
  /// the shed command for the newly latched stages, if any.
  std::optional<ShedCommand> evaluate(double frequency_hz, double time);

  const std::vector<bool>& latched() const { return latched_; }
  int latched_count() const;
  double cumulative_fraction() const;
  const UflsConfig& config() const { return cfg_; }

 private:
  UflsConfig cfg_;
  std::vector<bool> latched_;
};

/// Per-load-bus connected fraction. Demand at a bus is the connected share
/// of its nominal load plus whatever deviation acts on that share.
class LoadBook {
 public:
  explicit LoadBook(std::vector<double> nominal);

  struct ShedResult {
    double requested = 0.0;  // pu
    double applied = 0.0;    // pu
    bool ignored = false;
  };

  /// Removes fraction * initial total from the connected load,
  /// proportionally across buses. Permanent.
  ShedResult apply_shed(double fraction);

  const std::vector<double>& nominal() const { return nominal_; }
  const std::vector<double>& connected() const { return connected_; }
  double initial_total() const { return initial_total_; }
  double connected_total() const;

  /// Load deviation from nominal: (c_i - 1) P0_i + c_i * extra_i.
  Vector deviation(const Vector& extra) const;

 private:
  std::vector<double> nominal_;
  std::vector<double> connected_;
  double initial_total_ = 0.0;
};

struct GridCodeBand {
  std::string name;
  double low_hz = 0.0;
  double high_hz = 0.0;
  bool low_closed = true;
  bool high_closed = true;
  double max_dwell_s = 0.0;  // infinity: never violates; 0: violates at once

  bool contains(double f) const;
};

/// Grid-code bands. Gaps between printed table rows fall into the more
/// restrictive neighbour. `long_dwell_s` / `short_dwell_s` default to 30 min
/// and 30 s.
std::vector<GridCodeBand> default_grid_code(double long_dwell_s = 1800.0, double short_dwell_s = 30.0);

struct Verdict {
  bool violated = false;
  double time = 0.0;
  std::string band;
};

class GridCodeMonitor {
 public:
  explicit GridCodeMonitor(std::vector<GridCodeBand> bands = default_grid_code());

  /// Adds dt of dwell in the band containing f and resets every other timer.
  /// `time` is the end of the interval. Once violated the verdict is frozen.
  const Verdict& step(double frequency_hz, double dt, double time);

  const Verdict& verdict() const { return verdict_; }
  const std::vector<double>& dwell() const { return dwell_; }
  const std::vector<GridCodeBand>& bands() const { return bands_; }

 private:
  std::vector<GridCodeBand> bands_;
  std::vector<double> dwell_;
  Verdict verdict_;
};

/// Runs a monitor over a uniformly sampled trace.
Verdict judge_trace(const std::vector<double>& frequency_hz, double dt,
                    std::vector<GridCodeBand> bands = default_grid_code());

}  // namespace laasim
