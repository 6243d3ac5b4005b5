#pragma once

// Multiscale stack of 2D attractor networks. Each tick the displacement is
// routed to the network whose resolution (meters per neuron) is closest to
// it in log space; the others step with a zero command. The world position is
// the scale-weighted sum of every network's decoded offset from its start
// plus its wraparound buffer.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "mcan/can_core.hpp"
#include "mcan/head_direction.hpp"
#include "mcan/trajectory.hpp"

namespace mcan {

struct StackConfig {
  int neurons = 100;
  std::vector<double> scales{0.25, 1.0, 4.0, 16.0};
  double max_speed = 20.0;

  /// Equal-neuron single network at the finest multiscale resolution.
  static StackConfig single_scale() { return {200, {0.25}, 20.0}; }

  std::size_t neuron_count() const {
    return scales.size() * static_cast<std::size_t>(neurons) * neurons;
  }

  void validate() const {
    if (neurons <= 1) fail(ErrorKind::config, "network size must exceed one neuron");
    if (scales.empty()) fail(ErrorKind::config, "at least one scale is required");
    for (std::size_t j = 0; j < scales.size(); ++j) {
      if (!(scales[j] > 0.0) || !std::isfinite(scales[j])) {
        fail(ErrorKind::config, "scales must be positive");
      }
      if (j > 0 && !(scales[j] > scales[j - 1])) {
        fail(ErrorKind::config, "scales must be strictly increasing");
      }
    }
    if (!(max_speed > 0.0)) fail(ErrorKind::config, "max speed must be positive");
  }
};

/// Index of the scale nearest to the per-step displacement in log space.
/// Ties go to the finer scale; zero displacement selects the finest.
inline std::size_t select_scale(double displacement, std::span<const double> scales) {
  if (scales.empty()) fail(ErrorKind::config, "no scales to select from");
  if (!(displacement > 0.0)) return 0;
  const double target = std::log2(displacement);
  std::size_t best = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < scales.size(); ++j) {
    const double gap = std::abs(target - std::log2(scales[j]));
    if (gap < best_gap - 1e-12) {
      best_gap = gap;
      best = j;
    }
  }
  return best;
}

/// Buffer change in meters when a decoded index jumps across the torus edge.
/// A jump larger than half the network is a wrap; its direction is the
/// opposite of the jump's sign.
inline double update_wraparound(double prev_idx, double new_idx, int n, double scale) {
  const double jump = new_idx - prev_idx;
  if (jump < -0.5 * n) return n * scale;
  if (jump > 0.5 * n) return -n * scale;
  return 0.0;
}

class ScaleStack {
 public:
  struct StepInfo {
    std::size_t selected = 0;
    bool speed_clamped = false;
  };

  ScaleStack(const StackConfig& config, const NetworkParams& params) : config_(config) {
    config_.validate();
    params.validate();
    const int n = config_.neurons;
    origin_ = {static_cast<double>(n / 2), static_cast<double>(n / 2)};
    networks_.reserve(config_.scales.size());
    for (std::size_t j = 0; j < config_.scales.size(); ++j) {
      networks_.emplace_back(std::array<int, 2>{n, n}, std::array<int, 2>{n / 2, n / 2}, params);
    }
    wrap_.assign(config_.scales.size(), {0.0, 0.0});
    decoded_.assign(config_.scales.size(), origin_);
    for (std::size_t j = 0; j < networks_.size(); ++j) decoded_[j] = networks_[j].decode();
  }

  const StackConfig& config() const { return config_; }
  std::size_t size() const { return networks_.size(); }
  std::size_t neuron_count() const { return config_.neuron_count(); }
  const AttractorNetwork<2>& network(std::size_t j) const { return networks_.at(j); }
  const std::array<double, 2>& wrap_buffer(std::size_t j) const { return wrap_.at(j); }
  const std::array<double, 2>& decoded_index(std::size_t j) const { return decoded_.at(j); }
  const std::array<double, 2>& origin() const { return origin_; }

  std::size_t fault_count() const {
    std::size_t f = 0;
    for (const auto& net : networks_) f += net.fault_count();
    return f;
  }

  /// Integrate speed v (m/s) along heading (degrees) for dt seconds.
  StepInfo step(double v, double heading_deg, double dt) {
    StepInfo info;
    if (!std::isfinite(v) || !std::isfinite(heading_deg) || !(dt > 0.0)) {
      fail(ErrorKind::input, "speed, heading and dt must be finite with dt > 0");
    }
    if (v < 0.0 || v > config_.max_speed) {
      info.speed_clamped = true;
      v = std::clamp(v, 0.0, config_.max_speed);
    }
    const double dist = v * dt;
    const double rad = heading_deg * std::numbers::pi / 180.0;
    const double dx = dist * std::cos(rad);
    const double dy = dist * std::sin(rad);
    info.selected = select_scale(dist, config_.scales);
    step_routed(info.selected, {dx, dy});
    return info;
  }

  /// Command network `selected` with a world displacement in meters.
  void step_routed(std::size_t selected, const std::array<double, 2>& displacement) {
    const double s = config_.scales.at(selected);
    const auto cmd = ShiftCommand<2>::from_offset({displacement[0] / s, displacement[1] / s});
    const ShiftCommand<2> idle{};
    const int n = config_.neurons;
    for (std::size_t j = 0; j < networks_.size(); ++j) {
      networks_[j].step(j == selected ? cmd : idle);
      const auto now = decode_network(j);
      for (std::size_t a = 0; a < 2; ++a) {
        wrap_[j][a] += update_wraparound(decoded_[j][a], now[a], n, config_.scales[j]);
      }
      decoded_[j] = now;
    }
  }

  /// World offset in meters from the starting position.
  std::array<double, 2> decode() const {
    std::array<double, 2> pos{0.0, 0.0};
    for (std::size_t j = 0; j < networks_.size(); ++j) {
      pos[0] += network_offset(j, 0);
      pos[1] += network_offset(j, 1);
    }
    return pos;
  }

  /// Contribution of one network along one axis, in meters.
  double network_offset(std::size_t j, std::size_t axis) const {
    return config_.scales[j] * (decoded_[j][axis] - origin_[axis]) + wrap_[j][axis];
  }

  /// Decodes network j from its activity; throws naming the scale.
  std::array<double, 2> decode_network(std::size_t j) const {
    try {
      return networks_.at(j).decode();
    } catch (const Error& e) {
      fail(ErrorKind::undecodable,
           "network at scale " + std::to_string(config_.scales[j]) + " m: " + e.what());
    }
  }

 private:
  StackConfig config_;
  std::vector<AttractorNetwork<2>> networks_;
  std::vector<std::array<double, 2>> wrap_;
  std::vector<std::array<double, 2>> decoded_;
  std::array<double, 2> origin_{};
};

struct TrackResult {
  std::vector<PoseEstimate> estimates;
  std::size_t heading_faults = 0;
  std::size_t position_faults = 0;
};

/// Head direction ring feeding a scale stack: one estimate per sample.
/// The ring steps first; the stack moves along the circular midpoint of the
/// previous and new decoded headings.
inline TrackResult track_trajectory(const std::vector<MotionSample>& samples,
                                    const PoseEstimate& initial, const StackConfig& stack_config,
                                    const NetworkParams& stack_params,
                                    const NetworkParams& hd_params) {
  TrackResult result;
  auto& out = result.estimates;
  if (samples.empty()) return result;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (!(samples[i].t > samples[i - 1].t)) {
      fail(ErrorKind::input, "timestamps must be strictly increasing (sample " +
                                 std::to_string(i) + ")");
    }
  }
  HeadDirectionNetwork hd(wrap_degrees(initial.theta), hd_params);
  ScaleStack stack(stack_config, stack_params);
  out.reserve(samples.size());
  out.push_back({samples[0].t, initial.x, initial.y, hd.heading_degrees()});
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const double dt = samples[i].t - samples[i - 1].t;
    const double before = hd.heading_degrees();
    const double after = hd.step(samples[i].omega, dt);
    const double mid = wrap_degrees(before + 0.5 * angle_diff_degrees(after, before));
    stack.step(samples[i].v, mid, dt);
    const auto pos = stack.decode();
    out.push_back({samples[i].t, initial.x + pos[0], initial.y + pos[1], after});
  }
  result.heading_faults = hd.fault_count();
  result.position_faults = stack.fault_count();
  return result;
}

}  // namespace mcan
