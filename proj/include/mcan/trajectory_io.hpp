#pragma once

// Trajectory CSV files, Kitti pose files and metric reports.

#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "mcan/error.hpp"
#include "mcan/metrics.hpp"
#include "mcan/trajectory.hpp"

namespace mcan {

inline constexpr std::array<std::string_view, 6> dataset_columns{"t",    "v",    "omega",
                                                                 "gt_x", "gt_y", "gt_theta"};
inline constexpr std::array<std::string_view, 4> estimate_columns{"t", "x", "y", "theta"};

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) fail(ErrorKind::io, "cannot format number");
  return std::string(buf.data(), ptr);
}

namespace detail {

inline std::string trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return std::string(s);
}

inline std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

inline double parse_number(std::string_view text, std::string_view column, std::size_t row) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
    fail(ErrorKind::parse, "row " + std::to_string(row) + ", column '" + std::string(column) +
                               "': not a finite number: '" + std::string(text) + "'");
  }
  return value;
}

/// Reads a CSV whose header must contain `columns`; returns rows in column
/// order. Extra columns are ignored.
template <std::size_t N>
std::vector<std::array<double, N>> read_table(std::istream& in,
                                              const std::array<std::string_view, N>& columns) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::parse, "missing CSV header");
  const auto header = split_csv(line);
  std::array<std::size_t, N> where{};
  for (std::size_t c = 0; c < N; ++c) {
    std::size_t k = 0;
    while (k < header.size() && header[k] != columns[c]) ++k;
    if (k == header.size()) {
      fail(ErrorKind::parse, "missing column '" + std::string(columns[c]) + "'");
    }
    where[c] = k;
  }
  std::vector<std::array<double, N>> rows;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      fail(ErrorKind::parse, "row " + std::to_string(row) + ": expected " +
                                 std::to_string(header.size()) + " fields, got " +
                                 std::to_string(cells.size()));
    }
    std::array<double, N> values{};
    for (std::size_t c = 0; c < N; ++c) values[c] = parse_number(cells[where[c]], columns[c], row);
    rows.push_back(values);
  }
  return rows;
}

template <std::size_t N>
void write_header(std::ostream& out, const std::array<std::string_view, N>& columns) {
  for (std::size_t c = 0; c < N; ++c) out << (c ? "," : "") << columns[c];
  out << '\n';
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  return in;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  return out;
}

inline void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) fail(ErrorKind::io, "write failed for " + path.string());
}

}  // namespace detail

inline void write_dataset_csv(std::ostream& out, const TrajectoryDataset& data) {
  data.validate();
  detail::write_header(out, dataset_columns);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data.samples[i];
    const auto& g = data.ground_truth[i];
    out << format_double(s.t) << ',' << format_double(s.v) << ',' << format_double(s.omega) << ','
        << format_double(g.x) << ',' << format_double(g.y) << ',' << format_double(g.theta)
        << '\n';
  }
}

/// dt is taken from the first interval when available.
inline TrajectoryDataset read_dataset_csv(std::istream& in, std::string source = {}) {
  TrajectoryDataset data;
  data.source = std::move(source);
  for (const auto& r : detail::read_table(in, dataset_columns)) {
    data.samples.push_back({r[0], r[1], r[2]});
    data.ground_truth.push_back({r[0], r[3], r[4], r[5]});
  }
  if (data.size() >= 2) data.dt = data.samples[1].t - data.samples[0].t;
  data.validate();
  return data;
}

inline void write_estimate_csv(std::ostream& out, const std::vector<PoseEstimate>& poses) {
  detail::write_header(out, estimate_columns);
  for (const auto& p : poses) {
    out << format_double(p.t) << ',' << format_double(p.x) << ',' << format_double(p.y) << ','
        << format_double(p.theta) << '\n';
  }
}

inline std::vector<PoseEstimate> read_estimate_csv(std::istream& in) {
  std::vector<PoseEstimate> out;
  for (const auto& r : detail::read_table(in, estimate_columns)) {
    out.push_back({r[0], r[1], r[2], r[3]});
  }
  return out;
}

inline void save_dataset(const std::filesystem::path& path, const TrajectoryDataset& data) {
  auto out = detail::open_out(path);
  write_dataset_csv(out, data);
  detail::finish(out, path);
}

inline TrajectoryDataset load_dataset(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  return read_dataset_csv(in, path.stem().string());
}

inline void save_estimates(const std::filesystem::path& path,
                           const std::vector<PoseEstimate>& poses) {
  auto out = detail::open_out(path);
  write_estimate_csv(out, poses);
  detail::finish(out, path);
}

inline std::vector<PoseEstimate> load_estimates(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  return read_estimate_csv(in);
}

/// Kitti odometry ground truth: each row a row-major 3x4 camera pose. The
/// camera looks along +z with x to the right, so the ground plane is (x, z)
/// and yaw is measured from the camera's forward axis.
inline TrajectoryDataset read_kitti_poses(std::istream& in, double frame_dt = 0.1,
                                          std::string source = "kitti") {
  if (!(frame_dt > 0.0)) fail(ErrorKind::input, "frame interval must be positive");
  TrajectoryDataset data;
  data.source = std::move(source);
  data.dt = frame_dt;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    std::istringstream fields(line);
    std::array<double, 12> m{};
    std::string token;
    std::size_t count = 0;
    while (fields >> token) {
      if (count == 12) {
        fail(ErrorKind::parse, "row " + std::to_string(row) + ": more than 12 values");
      }
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
      if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(value)) {
        fail(ErrorKind::parse, "row " + std::to_string(row) + ": bad value '" + token + "'");
      }
      m[count++] = value;
    }
    if (count != 12) {
      fail(ErrorKind::parse,
           "row " + std::to_string(row) + ": expected 12 values, got " + std::to_string(count));
    }
    // Planar ground truth uses (x, z) as (x, y); the forward axis projects
    // to (r02, r22).
    const double t = static_cast<double>(data.ground_truth.size()) * frame_dt;
    data.ground_truth.push_back({t, m[3], m[11], std::atan2(m[10], m[2])});
  }

  const auto& gt = data.ground_truth;
  data.samples.reserve(gt.size());
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (i == 0) {
      data.samples.push_back({gt[0].t, 0.0, 0.0});
      continue;
    }
    const double dtheta = wrap_pi(gt[i].theta - gt[i - 1].theta);
    const double chord = std::hypot(gt[i].x - gt[i - 1].x, gt[i].y - gt[i - 1].y);
    // Arc length of the constant-curvature arc spanning the chord.
    const double half = 0.5 * dtheta;
    const double arc = std::abs(half) < 1e-9 ? chord : chord * half / std::sin(half);
    data.samples.push_back({gt[i].t, arc / frame_dt, dtheta / frame_dt});
  }
  return data;
}

inline TrajectoryDataset load_kitti_poses(const std::filesystem::path& path,
                                          double frame_dt = 0.1) {
  auto in = detail::open_in(path);
  return read_kitti_poses(in, frame_dt, path.stem().string());
}

/// MetricReport as flat key/value text, one `key: value` per line.
inline void write_report(std::ostream& out, const MetricReport& r, std::string_view name = {}) {
  if (!name.empty()) out << "name: " << name << '\n';
  out << "ate_m: " << format_double(r.ate_m) << '\n'
      << "ate_per_meter: " << format_double(r.ate_per_meter) << '\n'
      << "sad: " << format_double(r.sad) << '\n'
      << "distance_m: " << format_double(r.distance_m) << '\n'
      << "segment_errors:";
  for (double e : r.segment_errors) out << ' ' << format_double(e);
  out << '\n';
}

}  // namespace mcan
