#pragma once

// City-scale navigation simulator: OSM road extraction, occupancy grid
// rasterization, distance-transform route planning and bicycle-model
// traversal with pure-pursuit steering.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <compare>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <queue>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "mcan/error.hpp"
#include "mcan/metrics.hpp"
#include "mcan/trajectory.hpp"

namespace mcan {

inline constexpr double kmh_to_ms = 1000.0 / 3600.0;

struct BoundingBox {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  bool contains(const Point2& p) const {
    return p[0] >= min_x && p[0] <= max_x && p[1] >= min_y && p[1] <= max_y;
  }
};

struct RoadSegment {
  std::vector<Point2> points;
  std::string road_class;
  double speed = 0.0;  // m/s
};

struct RoadNetwork {
  std::vector<RoadSegment> segments;
  BoundingBox bounds;
};

struct OsmOptions {
  /// Side of the square region kept around the extract's center, meters.
  double region_size_m = 10000.0;
  double max_speed = 20.0;
};

/// Default speeds (m/s) per drivable highway class, used without maxspeed.
/// Values above the operating range are clamped when applied.
inline const std::map<std::string, double, std::less<>>& road_class_speeds() {
  static const std::map<std::string, double, std::less<>> table{
      {"motorway", 27.8},      {"motorway_link", 16.7}, {"trunk", 22.2},
      {"trunk_link", 16.7},    {"primary", 16.7},       {"primary_link", 13.9},
      {"secondary", 13.9},     {"secondary_link", 11.1}, {"tertiary", 11.1},
      {"tertiary_link", 8.3},  {"unclassified", 11.1},  {"residential", 8.3},
      {"living_street", 2.8},  {"service", 5.6},        {"road", 8.3},
  };
  return table;
}

/// Parses an OSM maxspeed value into m/s; nullopt when not numeric.
inline std::optional<double> parse_maxspeed(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || !(value > 0.0)) return std::nullopt;
  const std::string_view unit(ptr, text.data() + text.size() - ptr);
  if (unit.find("mph") != std::string_view::npos) return value * 1609.344 / 3600.0;
  if (unit.find("knots") != std::string_view::npos) return value * 1852.0 / 3600.0;
  return value * kmh_to_ms;
}

/// Extracts drivable ways from an OSM XML document. Coordinates are
/// projected equirectangularly about the region center; polylines are split
/// where they leave the square region.
inline RoadNetwork parse_osm(std::istream& in, const OsmOptions& options = {}) {
  namespace pt = boost::property_tree;
  pt::ptree doc;
  try {
    pt::read_xml(in, doc);
  } catch (const pt::xml_parser_error& e) {
    fail(ErrorKind::parse, "malformed OSM XML at line " + std::to_string(e.line()) + ": " +
                               e.message());
  }
  const auto osm = doc.get_child_optional("osm");
  if (!osm) fail(ErrorKind::parse, "document has no <osm> root element");

  struct LatLon {
    double lat;
    double lon;
  };
  std::unordered_map<std::int64_t, LatLon> nodes;
  std::optional<std::array<double, 4>> declared;
  struct RawWay {
    std::vector<std::int64_t> refs;
    std::string highway;
    std::optional<std::string> maxspeed;
  };
  std::vector<RawWay> ways;

  for (const auto& [tag, child] : *osm) {
    if (tag == "node") {
      const auto& attr = child.get_child("<xmlattr>");
      nodes[attr.get<std::int64_t>("id")] = {attr.get<double>("lat"), attr.get<double>("lon")};
    } else if (tag == "bounds") {
      const auto& attr = child.get_child("<xmlattr>");
      declared = std::array<double, 4>{attr.get<double>("minlat"), attr.get<double>("minlon"),
                                       attr.get<double>("maxlat"), attr.get<double>("maxlon")};
    } else if (tag == "way") {
      RawWay way;
      for (const auto& [wtag, wchild] : child) {
        if (wtag == "nd") {
          way.refs.push_back(wchild.get<std::int64_t>("<xmlattr>.ref"));
        } else if (wtag == "tag") {
          const auto k = wchild.get<std::string>("<xmlattr>.k");
          const auto v = wchild.get<std::string>("<xmlattr>.v");
          if (k == "highway") way.highway = v;
          if (k == "maxspeed") way.maxspeed = v;
        }
      }
      if (road_class_speeds().contains(way.highway) && way.refs.size() >= 2) {
        ways.push_back(std::move(way));
      }
    }
  }
  if (ways.empty()) fail(ErrorKind::input, "no drivable ways in OSM document");

  std::array<double, 4> box;
  if (declared) {
    box = *declared;
  } else {
    box = {90.0, 180.0, -90.0, -180.0};
    for (const auto& [id, n] : nodes) {
      box[0] = std::min(box[0], n.lat);
      box[1] = std::min(box[1], n.lon);
      box[2] = std::max(box[2], n.lat);
      box[3] = std::max(box[3], n.lon);
    }
  }
  constexpr double earth_radius = 6371000.0;
  const double lat0 = 0.5 * (box[0] + box[2]);
  const double lon0 = 0.5 * (box[1] + box[3]);
  const double deg = std::numbers::pi / 180.0;
  const double kx = earth_radius * std::cos(lat0 * deg) * deg;
  const double ky = earth_radius * deg;
  auto project = [&](const LatLon& ll) -> Point2 {
    return {(ll.lon - lon0) * kx, (ll.lat - lat0) * ky};
  };

  RoadNetwork net;
  const double half = 0.5 * options.region_size_m;
  net.bounds = {-half, -half, half, half};
  for (const auto& way : ways) {
    double speed = road_class_speeds().find(way.highway)->second;
    if (way.maxspeed) {
      if (const auto parsed = parse_maxspeed(*way.maxspeed)) speed = *parsed;
    }
    speed = std::min(speed, options.max_speed);
    RoadSegment current{{}, way.highway, speed};
    auto flush = [&] {
      if (current.points.size() >= 2) net.segments.push_back(current);
      current.points.clear();
    };
    for (std::int64_t ref : way.refs) {
      const auto it = nodes.find(ref);
      if (it == nodes.end()) {
        flush();
        continue;
      }
      const Point2 p = project(it->second);
      if (net.bounds.contains(p)) {
        current.points.push_back(p);
      } else {
        flush();
      }
    }
    flush();
  }
  return net;
}

inline RoadNetwork parse_osm(const std::string& document, const OsmOptions& options = {}) {
  std::istringstream in(document);
  return parse_osm(in, options);
}

struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

/// Per-cell speed in m/s; 0 marks a blocked cell.
struct OccupancyGrid {
  double resolution = 10.0;
  int width = 0;
  int height = 0;
  Point2 origin{0.0, 0.0};
  std::vector<double> speed;

  bool inside(const Cell& c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
  std::size_t index(const Cell& c) const {
    return static_cast<std::size_t>(c.y) * width + c.x;
  }
  double speed_at(const Cell& c) const { return speed[index(c)]; }
  bool traversable(const Cell& c) const { return inside(c) && speed_at(c) > 0.0; }
  Point2 center(const Cell& c) const {
    return {origin[0] + (c.x + 0.5) * resolution, origin[1] + (c.y + 0.5) * resolution};
  }
  Cell cell_of(const Point2& p) const {
    return {static_cast<int>(std::floor((p[0] - origin[0]) / resolution)),
            static_cast<int>(std::floor((p[1] - origin[1]) / resolution))};
  }
  std::size_t traversable_count() const {
    return static_cast<std::size_t>(
        std::count_if(speed.begin(), speed.end(), [](double s) { return s > 0.0; }));
  }
};

inline OccupancyGrid blocked_grid(int width, int height, double resolution = 1.0) {
  OccupancyGrid g;
  g.resolution = resolution;
  g.width = width;
  g.height = height;
  g.speed.assign(static_cast<std::size_t>(width) * height, 0.0);
  return g;
}

/// Draws every segment with 8-connected Bresenham lines; overlapping roads
/// keep the highest speed.
inline OccupancyGrid rasterize(const RoadNetwork& net, double resolution) {
  if (!(resolution > 0.0) || !std::isfinite(resolution)) {
    fail(ErrorKind::config, "grid resolution must be positive");
  }
  const double w = std::ceil(net.bounds.width() / resolution);
  const double h = std::ceil(net.bounds.height() / resolution);
  if (!(w * h <= 1e8)) fail(ErrorKind::config, "occupancy grid would exceed 1e8 cells");
  OccupancyGrid grid = blocked_grid(std::max(1, static_cast<int>(w)),
                                    std::max(1, static_cast<int>(h)), resolution);
  grid.origin = {net.bounds.min_x, net.bounds.min_y};

  auto clamp_cell = [&](Cell c) {
    return Cell{std::clamp(c.x, 0, grid.width - 1), std::clamp(c.y, 0, grid.height - 1)};
  };
  auto mark = [&](const Cell& c, double s) {
    double& cell = grid.speed[grid.index(c)];
    cell = std::max(cell, s);
  };
  for (const auto& seg : net.segments) {
    for (std::size_t i = 0; i + 1 < seg.points.size(); ++i) {
      Cell a = clamp_cell(grid.cell_of(seg.points[i]));
      const Cell b = clamp_cell(grid.cell_of(seg.points[i + 1]));
      const int dx = std::abs(b.x - a.x);
      const int dy = -std::abs(b.y - a.y);
      const int sx = a.x < b.x ? 1 : -1;
      const int sy = a.y < b.y ? 1 : -1;
      int err = dx + dy;
      while (true) {
        mark(a, seg.speed);
        if (a == b) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
          err += dy;
          a.x += sx;
        }
        if (e2 <= dx) {
          err += dx;
          a.y += sy;
        }
      }
    }
  }
  return grid;
}

/// Exact 8-connected path cost: straight + diagonal * sqrt(2).
struct PathCost {
  std::int64_t straight = 0;
  std::int64_t diagonal = 0;

  double value() const { return straight + diagonal * std::numbers::sqrt2; }

  PathCost operator+(const PathCost& o) const {
    return {straight + o.straight, diagonal + o.diagonal};
  }

  friend bool operator==(const PathCost&, const PathCost&) = default;

  friend std::strong_ordering operator<=>(const PathCost& a, const PathCost& b) {
    // Sign of (a.s - b.s) + (a.d - b.d) * sqrt(2), computed exactly.
    const std::int64_t ds = a.straight - b.straight;
    const std::int64_t dd = a.diagonal - b.diagonal;
    auto sign = [](std::int64_t v) { return (v > 0) - (v < 0); };
    if (dd == 0) return sign(ds) <=> 0;
    if (ds == 0) return sign(dd) <=> 0;
    if (sign(ds) == sign(dd)) return sign(ds) <=> 0;
    const std::int64_t lhs = ds * ds;
    const std::int64_t rhs = 2 * dd * dd;
    // |ds| vs |dd| sqrt(2); the larger magnitude decides the sign.
    return lhs > rhs ? (sign(ds) <=> 0) : (sign(dd) <=> 0);
  }
};

inline constexpr std::array<std::array<int, 2>, 8> neighbor_offsets{
    {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};

inline PathCost step_cost(int dx, int dy) {
  return (dx != 0 && dy != 0) ? PathCost{0, 1} : PathCost{1, 0};
}

/// Wavefront distance from `goal` over traversable cells; nullopt where
/// unreachable.
inline std::vector<std::optional<PathCost>> distance_transform(const OccupancyGrid& grid,
                                                               const Cell& goal) {
  std::vector<std::optional<PathCost>> dist(grid.speed.size());
  if (!grid.traversable(goal)) return dist;
  using Entry = std::pair<PathCost, std::size_t>;
  auto later = [](const Entry& a, const Entry& b) { return a.first > b.first; };
  std::priority_queue<Entry, std::vector<Entry>, decltype(later)> open(later);
  dist[grid.index(goal)] = PathCost{};
  open.push({PathCost{}, grid.index(goal)});
  while (!open.empty()) {
    const auto [cost, idx] = open.top();
    open.pop();
    if (*dist[idx] < cost) continue;
    const Cell c{static_cast<int>(idx % grid.width), static_cast<int>(idx / grid.width)};
    for (const auto& [dx, dy] : neighbor_offsets) {
      const Cell n{c.x + dx, c.y + dy};
      if (!grid.traversable(n)) continue;
      const PathCost nc = cost + step_cost(dx, dy);
      auto& slot = dist[grid.index(n)];
      if (!slot || nc < *slot) {
        slot = nc;
        open.push({nc, grid.index(n)});
      }
    }
  }
  return dist;
}

/// Optimal 8-connected route by steepest descent on the distance transform.
inline std::vector<Cell> plan_route(const OccupancyGrid& grid, const Cell& start,
                                    const Cell& goal) {
  if (!grid.traversable(start) || !grid.traversable(goal)) {
    fail(ErrorKind::input, "route endpoints must be traversable cells");
  }
  const auto dist = distance_transform(grid, goal);
  if (!dist[grid.index(start)]) fail(ErrorKind::unreachable, "goal is not reachable from start");
  std::vector<Cell> path{start};
  Cell c = start;
  while (!(c == goal)) {
    const PathCost here = *dist[grid.index(c)];
    std::optional<Cell> best;
    for (const auto& [dx, dy] : neighbor_offsets) {
      const Cell n{c.x + dx, c.y + dy};
      if (!grid.traversable(n) || !dist[grid.index(n)]) continue;
      if (*dist[grid.index(n)] + step_cost(dx, dy) == here) {
        best = n;
        break;
      }
    }
    if (!best) fail(ErrorKind::numerical_fault, "distance transform is inconsistent");
    c = *best;
    path.push_back(c);
  }
  return path;
}

inline PathCost route_cost(const std::vector<Cell>& path) {
  PathCost total;
  for (std::size_t i = 1; i < path.size(); ++i) {
    total = total + step_cost(path[i].x - path[i - 1].x, path[i].y - path[i - 1].y);
  }
  return total;
}

/// 8-connected component label per cell; -1 for blocked cells.
inline std::vector<int> label_components(const OccupancyGrid& grid, std::vector<std::size_t>* sizes) {
  std::vector<int> label(grid.speed.size(), -1);
  std::vector<std::size_t> stack;
  int next = 0;
  if (sizes) sizes->clear();
  for (std::size_t i = 0; i < grid.speed.size(); ++i) {
    if (grid.speed[i] <= 0.0 || label[i] >= 0) continue;
    std::size_t count = 0;
    label[i] = next;
    stack.push_back(i);
    while (!stack.empty()) {
      const std::size_t k = stack.back();
      stack.pop_back();
      ++count;
      const Cell c{static_cast<int>(k % grid.width), static_cast<int>(k / grid.width)};
      for (const auto& [dx, dy] : neighbor_offsets) {
        const Cell n{c.x + dx, c.y + dy};
        if (!grid.traversable(n)) continue;
        const std::size_t ni = grid.index(n);
        if (label[ni] < 0) {
          label[ni] = next;
          stack.push_back(ni);
        }
      }
    }
    if (sizes) sizes->push_back(count);
    ++next;
  }
  return label;
}

/// Uniformly random distinct, mutually reachable traversable cells at least
/// `min_separation_m` apart.
template <class Urbg>
std::pair<Cell, Cell> sample_endpoints(const OccupancyGrid& grid, Urbg& rng,
                                       double min_separation_m = 0.0, int max_attempts = 1000) {
  std::vector<std::size_t> free;
  for (std::size_t i = 0; i < grid.speed.size(); ++i) {
    if (grid.speed[i] > 0.0) free.push_back(i);
  }
  if (free.size() < 2) fail(ErrorKind::input, "grid has fewer than two traversable cells");
  std::vector<std::size_t> sizes;
  const auto label = label_components(grid, &sizes);
  std::vector<std::vector<std::size_t>> members(sizes.size());
  for (std::size_t i : free) members[label[i]].push_back(i);

  auto to_cell = [&](std::size_t k) {
    return Cell{static_cast<int>(k % grid.width), static_cast<int>(k / grid.width)};
  };
  std::uniform_int_distribution<std::size_t> pick_start(0, free.size() - 1);
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    const std::size_t s = free[pick_start(rng)];
    const auto& group = members[label[s]];
    if (group.size() < 2) continue;
    std::uniform_int_distribution<std::size_t> pick_goal(0, group.size() - 1);
    const std::size_t g = group[pick_goal(rng)];
    if (g == s) continue;
    const Cell a = to_cell(s);
    const Cell b = to_cell(g);
    const double sep = grid.resolution * std::hypot(a.x - b.x, a.y - b.y);
    if (sep < min_separation_m) continue;
    return {a, b};
  }
  fail(ErrorKind::unreachable, "no connected endpoint pair found");
}

struct BicycleConfig {
  double wheelbase = 2.5;        // m
  double lookahead_cells = 3.0;  // minimum pure-pursuit lookahead
  double lookahead_time = 2.0;   // s; lookahead grows with speed
  double max_accel = 2.0;        // m/s^2
  double max_steer = 0.6;        // rad
  double max_lateral_accel = 3.0;
  double dt = 1.0;
  int max_steps = 200000;
};

class TraverseTimeout : public Error {
 public:
  explicit TraverseTimeout(TrajectoryDataset partial)
      : Error(ErrorKind::timeout, "goal not reached within the step budget"),
        partial_(std::move(partial)) {}
  const TrajectoryDataset& partial() const { return partial_; }

 private:
  TrajectoryDataset partial_;
};

struct BicycleState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double v = 0.0;
};

/// One bicycle-model step at speed v with steering angle `steer`.
inline Pose2 bicycle_step(const Pose2& pose, double v, double steer, double wheelbase, double dt,
                          double* omega_out = nullptr) {
  const double omega = v / wheelbase * std::tan(steer);
  if (omega_out) *omega_out = omega;
  return integrate_arc(pose, v, omega, dt);
}

/// Drives the route with pure pursuit, recording (t, v, omega) and poses.
inline TrajectoryDataset traverse(const std::vector<Cell>& path, const OccupancyGrid& grid,
                                  const BicycleConfig& model) {
  if (path.empty()) fail(ErrorKind::input, "cannot traverse an empty path");
  TrajectoryDataset data;
  data.dt = model.dt;
  std::vector<Point2> way;
  way.reserve(path.size());
  for (const auto& c : path) way.push_back(grid.center(c));
  std::vector<double> along(way.size(), 0.0);
  for (std::size_t i = 1; i < way.size(); ++i) {
    along[i] = along[i - 1] + std::hypot(way[i][0] - way[i - 1][0], way[i][1] - way[i - 1][1]);
  }

  Pose2 pose{0.0, way[0][0], way[0][1], 0.0};
  if (way.size() > 1) {
    const auto& ahead = way[std::min<std::size_t>(way.size() - 1,
                                                  static_cast<std::size_t>(model.lookahead_cells))];
    pose.theta = std::atan2(ahead[1] - way[0][1], ahead[0] - way[0][0]);
  }
  data.samples.push_back({0.0, 0.0, 0.0});
  data.ground_truth.push_back(pose);
  const Point2 goal = way.back();
  auto near_goal = [&] { return std::hypot(pose.x - goal[0], pose.y - goal[1]) < grid.resolution; };
  if (way.size() == 1 || near_goal()) return data;

  std::size_t progress = 0;
  double v = 0.0;
  for (int step = 0; step < model.max_steps; ++step) {
    // Advance the progress index to the nearest waypoint ahead.
    std::size_t best = progress;
    double best_d = std::numeric_limits<double>::infinity();
    const double reach = 2.0 * (v * model.dt + grid.resolution);
    for (std::size_t k = progress; k < way.size() && along[k] - along[progress] <= reach; ++k) {
      const double d = std::hypot(way[k][0] - pose.x, way[k][1] - pose.y);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    progress = best;

    const double lookahead =
        std::max(model.lookahead_cells * grid.resolution, model.lookahead_time * v);
    std::size_t target = progress;
    while (target + 1 < way.size() && along[target] - along[progress] < lookahead) ++target;
    const double tx = way[target][0] - pose.x;
    const double ty = way[target][1] - pose.y;
    const double ld = std::max(std::hypot(tx, ty), 1e-6);
    const double bearing = wrap_pi(std::atan2(ty, tx) - pose.theta);
    const double steer = std::clamp(std::atan2(2.0 * model.wheelbase * std::sin(bearing), ld),
                                    -model.max_steer, model.max_steer);

    // Speed: local limit, braking preview for slower cells and the goal,
    // lateral acceleration in turns, bounded acceleration.
    double limit = grid.speed_at(path[progress]);
    const double horizon = v * model.dt + v * v / (2.0 * model.max_accel) + grid.resolution;
    for (std::size_t k = progress; k < way.size() && along[k] - along[progress] <= horizon; ++k) {
      const double d = along[k] - along[progress];
      limit = std::min(limit, std::sqrt(grid.speed_at(path[k]) * grid.speed_at(path[k]) +
                                        2.0 * model.max_accel * d));
    }
    const double to_goal = along.back() - along[progress] + best_d;
    limit = std::min(limit, std::sqrt(2.0 * model.max_accel * to_goal) + model.max_accel * model.dt);
    limit = std::min(limit, grid.speed_at(path[progress]));
    if (const Cell here = grid.cell_of({pose.x, pose.y}); grid.traversable(here)) {
      limit = std::min(limit, grid.speed_at(here));
    }
    const double curvature = std::abs(std::tan(steer)) / model.wheelbase;
    if (curvature > 1e-9) limit = std::min(limit, std::sqrt(model.max_lateral_accel / curvature));
    v = std::clamp(std::min(v + model.max_accel * model.dt, limit), 0.0, limit);
    // A stalled vehicle creeps so it cannot deadlock on a zero limit.
    if (v <= 0.0) v = std::min(0.5, grid.speed_at(path[progress]));

    double omega = 0.0;
    pose = bicycle_step(pose, v, steer, model.wheelbase, model.dt, &omega);
    pose.t = data.samples.back().t + model.dt;
    data.samples.push_back({pose.t, v, omega});
    data.ground_truth.push_back(pose);
    if (near_goal()) return data;
  }
  throw TraverseTimeout(std::move(data));
}

struct SimulatedTrack {
  Cell start;
  Cell goal;
  std::vector<Cell> route;
  TrajectoryDataset data;
};

/// Samples endpoints, plans and drives one track. `rng` drives endpoint
/// sampling only.
template <class Urbg>
SimulatedTrack simulate_track(const OccupancyGrid& grid, Urbg& rng, const BicycleConfig& model,
                              double min_separation_m = 0.0) {
  SimulatedTrack track;
  std::tie(track.start, track.goal) = sample_endpoints(grid, rng, min_separation_m);
  track.route = plan_route(grid, track.start, track.goal);
  track.data = traverse(track.route, grid, model);
  return track;
}

}  // namespace mcan
