#pragma once

#include <cstdint>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace laasim {

// Message payloads of the measurement/command protocol. Framing is reduced
// to typed frames with sequence numbers and timestamps.

/// Area-level telemetry for the secondary controller.
struct AreaMeasurement {
  int area = 0;
  double freq_dev_hz = 0.0;
  double tie_dev_pu = 0.0;
  double timestamp = 0.0;
};

/// Frequency snapshot used by protection relays and attack agents.
struct FrequencySample {
  double timestamp = 0.0;
  double system_dev_hz = 0.0;
  std::vector<double> gen_dev_hz;
  std::vector<double> area_dev_hz;
};

struct SetpointCommand {
  int area = 0;
  std::vector<std::pair<int, double>> setpoints;  // (generator, pu)
  double timestamp = 0.0;
};

struct ShedCommand {
  std::vector<int> stages;
  double fraction = 0.0;  // of initial total load
  double timestamp = 0.0;
};

enum class FrameKind { Measurement, Command, Event };

using Payload = std::variant<AreaMeasurement, FrequencySample, SetpointCommand, ShedCommand>;

struct Frame {
  FrameKind kind = FrameKind::Measurement;
  int source = 0;
  int destination = 0;
  std::uint64_t seq = 0;
  double send_time = 0.0;
  double deliver_time = 0.0;
  Payload payload;
};

struct NetProfile {
  double delay_s = 0.0;
  double jitter_s = 0.0;  // uniform in [-jitter, +jitter]
  double loss = 0.0;
  std::uint64_t seed = 1;
};

/// Throws ConfigError for negative delay/jitter or loss outside [0,1].
void validate(const NetProfile& p);

struct ChannelStats {
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  double total_delay = 0.0;

  double mean_delay() const { return delivered == 0 ? 0.0 : total_delay / static_cast<double>(delivered); }
};

/// One directed link. Sequence numbers are assigned on send and are shared
/// by every source on the link.
class Channel {
 public:
  explicit Channel(NetProfile profile = {}, std::string name = "link");

  /// Returns the scheduled delivery time, or nullopt when the frame is lost.
  std::optional<double> send(Frame frame, double now);

  /// Frames with deliver time <= now, ordered by (deliver time, seq).
  /// Throws ContractError when `now` moves backwards.
  std::vector<Frame> poll(double now);

  const ChannelStats& stats() const { return stats_; }
  const NetProfile& profile() const { return profile_; }
  const std::string& name() const { return name_; }
  std::size_t in_flight() const { return queue_.size(); }

 private:
  double uniform();

  struct Later {
    bool operator()(const Frame& a, const Frame& b) const {
      if (a.deliver_time != b.deliver_time) return a.deliver_time > b.deliver_time;
      return a.seq > b.seq;
    }
  };

  NetProfile profile_;
  std::string name_;
  std::mt19937_64 rng_;
  std::priority_queue<Frame, std::vector<Frame>, Later> queue_;
  ChannelStats stats_;
  std::uint64_t next_seq_ = 1;
  double last_poll_ = -1e300;
};

}  // namespace laasim
