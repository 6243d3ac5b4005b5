#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "mcan/error.hpp"
#include "mcan/head_direction.hpp"
#include "mcan/trajectory.hpp"

namespace mcan {

using Point2 = std::array<double, 2>;

template <class PoseLike>
std::vector<Point2> positions(const std::vector<PoseLike>& poses) {
  std::vector<Point2> out;
  out.reserve(poses.size());
  for (const auto& p : poses) out.push_back({p.x, p.y});
  return out;
}

/// Rigid planar transform p -> R(angle) p + translation.
struct Rigid2 {
  double angle = 0.0;
  Point2 translation{0.0, 0.0};

  Point2 apply(const Point2& p) const {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {c * p[0] - s * p[1] + translation[0], s * p[0] + c * p[1] + translation[1]};
  }
};

namespace detail {

inline void require_same_length(std::size_t a, std::size_t b) {
  if (a != b) {
    fail(ErrorKind::input, "trajectory lengths differ (" + std::to_string(a) + " vs " +
                               std::to_string(b) + ")");
  }
}

}  // namespace detail

/// Least-squares rotation + translation (no scale) taking estimate onto truth.
inline Rigid2 align_se2(std::span<const Point2> estimate, std::span<const Point2> truth) {
  detail::require_same_length(estimate.size(), truth.size());
  if (estimate.empty()) fail(ErrorKind::input, "cannot align empty trajectories");
  const double n = static_cast<double>(estimate.size());
  Point2 ce{0.0, 0.0};
  Point2 ct{0.0, 0.0};
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    ce[0] += estimate[i][0];
    ce[1] += estimate[i][1];
    ct[0] += truth[i][0];
    ct[1] += truth[i][1];
  }
  ce = {ce[0] / n, ce[1] / n};
  ct = {ct[0] / n, ct[1] / n};
  double dot = 0.0;
  double cross = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const double ex = estimate[i][0] - ce[0];
    const double ey = estimate[i][1] - ce[1];
    const double tx = truth[i][0] - ct[0];
    const double ty = truth[i][1] - ct[1];
    dot += ex * tx + ey * ty;
    cross += ex * ty - ey * tx;
  }
  Rigid2 tf;
  tf.angle = (dot == 0.0 && cross == 0.0) ? 0.0 : std::atan2(cross, dot);
  const Point2 rotated = Rigid2{tf.angle, {0.0, 0.0}}.apply(ce);
  tf.translation = {ct[0] - rotated[0], ct[1] - rotated[1]};
  return tf;
}

/// RMSE of point distances after rigid alignment.
inline double ate(std::span<const Point2> estimate, std::span<const Point2> truth) {
  const Rigid2 tf = align_se2(estimate, truth);
  double sq = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const Point2 p = tf.apply(estimate[i]);
    sq += (p[0] - truth[i][0]) * (p[0] - truth[i][0]) + (p[1] - truth[i][1]) * (p[1] - truth[i][1]);
  }
  return std::sqrt(sq / static_cast<double>(estimate.size()));
}

/// Sum of |dx| + |dy| per step, without alignment.
inline double sad(std::span<const Point2> estimate, std::span<const Point2> truth) {
  detail::require_same_length(estimate.size(), truth.size());
  double total = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    total += std::abs(estimate[i][0] - truth[i][0]) + std::abs(estimate[i][1] - truth[i][1]);
  }
  return total;
}

/// Heading variant of SAD: sum of circular differences in degrees.
inline double sad_heading(std::span<const double> estimate_deg, std::span<const double> truth_deg) {
  detail::require_same_length(estimate_deg.size(), truth_deg.size());
  double total = 0.0;
  for (std::size_t i = 0; i < estimate_deg.size(); ++i) {
    total += std::abs(angle_diff_degrees(estimate_deg[i], truth_deg[i]));
  }
  return total;
}

/// ATE of consecutive pieces of `segment_length` meters of ground-truth
/// travel, each aligned on its own.
inline std::vector<double> segment_ate(std::span<const Point2> estimate,
                                       std::span<const Point2> truth, double segment_length) {
  detail::require_same_length(estimate.size(), truth.size());
  if (!(segment_length > 0.0)) fail(ErrorKind::input, "segment length must be positive");
  if (truth.empty()) return {};
  std::vector<double> cumulative(truth.size(), 0.0);
  for (std::size_t i = 1; i < truth.size(); ++i) {
    cumulative[i] = cumulative[i - 1] +
                    std::hypot(truth[i][0] - truth[i - 1][0], truth[i][1] - truth[i - 1][1]);
  }
  const double total = cumulative.back();
  const auto count = static_cast<std::size_t>(
      std::max(1.0, std::ceil(total / segment_length - 1e-9)));
  std::vector<double> scores;
  scores.reserve(count);
  std::size_t begin = 0;
  for (std::size_t seg = 0; seg < count; ++seg) {
    std::size_t end = begin;
    while (end < truth.size() &&
           (seg + 1 == count ||
            static_cast<std::size_t>(std::floor(cumulative[end] / segment_length)) <= seg)) {
      ++end;
    }
    if (end == begin) {
      scores.push_back(0.0);
      continue;
    }
    scores.push_back(ate(estimate.subspan(begin, end - begin), truth.subspan(begin, end - begin)));
    begin = end;
  }
  return scores;
}

struct MetricReport {
  double ate_m = 0.0;
  double ate_per_meter = 0.0;
  double sad = 0.0;
  double distance_m = 0.0;
  std::vector<double> segment_errors;
};

/// Full report; ATE/m divides by ground-truth path length.
inline MetricReport evaluate(std::span<const Point2> estimate, std::span<const Point2> truth,
                             double segment_length = 1000.0) {
  MetricReport r;
  r.ate_m = ate(estimate, truth);
  r.sad = sad(estimate, truth);
  for (std::size_t i = 1; i < truth.size(); ++i) {
    r.distance_m += std::hypot(truth[i][0] - truth[i - 1][0], truth[i][1] - truth[i - 1][1]);
  }
  r.ate_per_meter = r.distance_m > 0.0 ? r.ate_m / r.distance_m : 0.0;
  r.segment_errors = segment_ate(estimate, truth, segment_length);
  return r;
}

}  // namespace mcan
