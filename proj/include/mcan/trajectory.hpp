#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "mcan/error.hpp"

namespace mcan {

/// Planar pose. theta in radians for datasets and ground truth.
struct Pose2 {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  friend bool operator==(const Pose2&, const Pose2&) = default;
};

/// Velocity over the interval ending at t. The first sample of a dataset is
/// the anchor state; its velocities are not integrated.
struct MotionSample {
  double t = 0.0;
  double v = 0.0;
  double omega = 0.0;

  friend bool operator==(const MotionSample&, const MotionSample&) = default;
};

struct TrajectoryDataset {
  std::vector<MotionSample> samples;
  std::vector<Pose2> ground_truth;
  std::string source;
  double dt = 1.0;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }

  /// Sum of v * dt over the integrated samples.
  double total_distance() const {
    double d = 0.0;
    for (std::size_t i = 1; i < samples.size(); ++i) {
      d += samples[i].v * (samples[i].t - samples[i - 1].t);
    }
    return d;
  }

  void validate() const {
    if (samples.size() != ground_truth.size()) {
      fail(ErrorKind::input, "samples and ground truth differ in length");
    }
    for (std::size_t i = 1; i < samples.size(); ++i) {
      if (!(samples[i].t > samples[i - 1].t)) {
        fail(ErrorKind::input, "timestamps must be strictly increasing (row " +
                                   std::to_string(i) + ")");
      }
    }
  }
};

/// Decoded estimate; theta in degrees in [0, 360).
struct PoseEstimate {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  friend bool operator==(const PoseEstimate&, const PoseEstimate&) = default;
};

inline double wrap_pi(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a;
}

/// Exact constant-(v, omega) arc over dt.
inline Pose2 integrate_arc(const Pose2& p, double v, double omega, double dt) {
  Pose2 out = p;
  out.t = p.t + dt;
  const double dtheta = omega * dt;
  if (std::abs(dtheta) < 1e-9) {
    const double mid = p.theta + 0.5 * dtheta;
    out.x += v * dt * std::cos(mid);
    out.y += v * dt * std::sin(mid);
  } else {
    const double r = v / omega;
    out.x += r * (std::sin(p.theta + dtheta) - std::sin(p.theta));
    out.y += r * (std::cos(p.theta) - std::cos(p.theta + dtheta));
  }
  out.theta = wrap_pi(p.theta + dtheta);
  return out;
}

/// Re-integrates a velocity stream from the first ground-truth pose.
inline std::vector<Pose2> integrate_samples(const std::vector<MotionSample>& samples,
                                            const Pose2& start) {
  std::vector<Pose2> poses;
  if (samples.empty()) return poses;
  poses.reserve(samples.size());
  Pose2 p = start;
  p.t = samples.front().t;
  poses.push_back(p);
  for (std::size_t i = 1; i < samples.size(); ++i) {
    p = integrate_arc(p, samples[i].v, samples[i].omega, samples[i].t - samples[i - 1].t);
    p.t = samples[i].t;
    poses.push_back(p);
  }
  return poses;
}

/// Path length of the ground truth polyline.
inline double path_length(const std::vector<Pose2>& poses) {
  double d = 0.0;
  for (std::size_t i = 1; i < poses.size(); ++i) {
    d += std::hypot(poses[i].x - poses[i - 1].x, poses[i].y - poses[i - 1].y);
  }
  return d;
}

/// Random drive: speed drawn uniformly in [0, max_speed] every step, turn
/// rate drawn uniformly in [-max_turn_rate, max_turn_rate]. Ground truth is
/// the exact integration of the samples.
template <class Urbg>
TrajectoryDataset random_drive(std::size_t steps, double max_speed, double max_turn_rate,
                               double dt, Urbg& rng) {
  if (!(dt > 0.0) || !(max_speed >= 0.0) || !(max_turn_rate >= 0.0)) {
    fail(ErrorKind::input, "random drive needs dt > 0 and nonnegative limits");
  }
  std::uniform_real_distribution<double> speed(0.0, max_speed);
  std::uniform_real_distribution<double> turn(-max_turn_rate, max_turn_rate);
  TrajectoryDataset data;
  data.dt = dt;
  data.source = "random_drive";
  data.samples.reserve(steps + 1);
  data.samples.push_back({0.0, 0.0, 0.0});
  for (std::size_t i = 1; i <= steps; ++i) {
    const double v = speed(rng);
    const double w = turn(rng);
    data.samples.push_back({static_cast<double>(i) * dt, v, w});
  }
  data.ground_truth = integrate_samples(data.samples, Pose2{});
  return data;
}

}  // namespace mcan
