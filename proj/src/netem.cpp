#include "laasim/netem.hpp"

#include <algorithm>
#include <cmath>

#include "laasim/errors.hpp"

namespace laasim {

namespace {
// Logical times are built from integer step counts; this absorbs the
// rounding of k * dt against delay sums.
constexpr double kTimeSlack = 1e-9;
}  // namespace

void validate(const NetProfile& p) {
  if (!std::isfinite(p.delay_s) || p.delay_s < 0.0) throw ConfigError("network delay must be >= 0");
  if (!std::isfinite(p.jitter_s) || p.jitter_s < 0.0) throw ConfigError("network jitter must be >= 0");
  if (!(p.loss >= 0.0 && p.loss <= 1.0)) throw ConfigError("network loss must lie in [0,1]");
}

Channel::Channel(NetProfile profile, std::string name)
    : profile_(profile), name_(std::move(name)), rng_(profile.seed) {
  validate(profile_);
}

double Channel::uniform() {
  // 53 random bits -> [0,1); identical on every standard library.
  return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
}

std::optional<double> Channel::send(Frame frame, double now) {
  frame.seq = next_seq_++;
  frame.send_time = now;
  ++stats_.sent;
  const double lose = uniform();
  const double jitter = uniform();
  if (lose < profile_.loss) {
    ++stats_.dropped;
    return std::nullopt;
  }
  const double offset = profile_.jitter_s * (2.0 * jitter - 1.0);
  frame.deliver_time = std::max(now, now + profile_.delay_s + offset);
  const double at = frame.deliver_time;
  queue_.push(std::move(frame));
  return at;
}

std::vector<Frame> Channel::poll(double now) {
  if (now < last_poll_) throw ContractError("channel '" + name_ + "' polled with time running backwards");
  last_poll_ = now;
  std::vector<Frame> out;
  while (!queue_.empty() && queue_.top().deliver_time <= now + kTimeSlack) {
    out.push_back(queue_.top());
    queue_.pop();
    ++stats_.delivered;
    stats_.total_delay += out.back().deliver_time - out.back().send_time;
  }
  return out;
}

}  // namespace laasim
