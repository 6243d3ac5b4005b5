#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "mcan/can_core.hpp"

namespace mcan {

inline double wrap_degrees(double deg) {
  double d = std::fmod(deg, 360.0);
  if (d < 0.0) d += 360.0;
  if (d >= 360.0) d -= 360.0;
  return d;
}

/// Signed smallest difference a - b in degrees, in [-180, 180).
inline double angle_diff_degrees(double a, double b) {
  double d = std::fmod(a - b + 180.0, 360.0);
  if (d < 0.0) d += 360.0;
  return d - 180.0;
}

/// Ring attractor integrating angular velocity into a heading estimate.
class HeadDirectionNetwork {
 public:
  static constexpr int default_neurons = 360;

  HeadDirectionNetwork(double initial_heading_deg, const NetworkParams& params,
                       int neurons = default_neurons)
      : network_({neurons}, {start_neuron(initial_heading_deg, neurons)}, params),
        heading_deg_(wrap_degrees(decode_degrees())) {}

  int neurons() const { return network_.activity().extent(0); }

  /// Advance by omega (rad/s) over dt seconds. Returns the decoded heading.
  double step(double omega, double dt) {
    const double shift = omega * dt * neurons() / (2.0 * std::numbers::pi);
    if (!std::isfinite(shift) || std::abs(shift) >= 0.5 * neurons()) {
      fail(ErrorKind::out_of_range,
           "angular step exceeds half the ring; dt too coarse for omega");
    }
    network_.step(ShiftCommand<1>::from_offset({shift}));
    heading_deg_ = decode_degrees();
    return heading_deg_;
  }

  double heading_degrees() const { return heading_deg_; }
  const ActivityRing& ring() const { return network_.activity(); }
  const NetworkParams& params() const { return network_.params(); }
  std::size_t fault_count() const { return network_.fault_count(); }

 private:
  static int start_neuron(double heading_deg, int neurons) {
    if (!(heading_deg >= 0.0 && heading_deg < 360.0)) {
      fail(ErrorKind::input, "initial heading must lie in [0, 360)");
    }
    return wrap_index(static_cast<int>(std::lround(heading_deg * neurons / 360.0)), neurons);
  }

  double decode_degrees() const {
    return wrap_degrees(decode_index(network_.activity()) * 360.0 / neurons());
  }

  AttractorNetwork<1> network_;
  double heading_deg_;
};

/// Circular-mean heading of a ring in degrees.
inline double hd_decode(const ActivityRing& ring) {
  return wrap_degrees(decode_index(ring) * 360.0 / ring.extent(0));
}

}  // namespace mcan
