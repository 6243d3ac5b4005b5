#pragma once

// Continuous attractor dynamics on 1D rings and 2D tori.
//
// One update of a network X under a shift command:
//
//   C    = integer shifted copy of the active neurons of X (wraps at edges)
//   C_f  = gamma * separable linear interpolation of C by the fractional part
//   I    = C_f where C_f > 0, X elsewhere (the copy replaces what it lands on)
//   eps  = Gaussian excitation of I over a (2E+1)-wide window
//   mu   = phi * sum(I + eps)
//   X'   = normalize(max(I + eps - mu, 0))
//
// Activity that the copy does not land on stays in place. With small shifts
// that is only the trailing rim of the bump; with shifts larger than the bump
// the old packet survives and competes with the moved one.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcan/error.hpp"

namespace mcan {

inline int wrap_index(int i, int n) {
  int r = i % n;
  return r < 0 ? r + n : r;
}

/// Tuned dynamics parameters. A and E are in neurons; the Gaussian widths
/// default to half of the window radius they are used with.
struct NetworkParams {
  int activation_radius = 4;
  int excitation_radius = 4;
  double motion_confidence = 1.0;
  double inhibition_factor = 0.002;
  std::optional<double> sigma_x;
  std::optional<double> sigma_y;

  static constexpr int min_radius = 1;
  static constexpr int max_radius = 10;
  static constexpr double min_inhibition = 0.00001;
  static constexpr double max_inhibition = 0.005;

  double init_sigma(std::size_t axis) const {
    return sigma_for(axis, activation_radius);
  }
  double excitation_sigma(std::size_t axis) const {
    return sigma_for(axis, excitation_radius);
  }

  void validate() const {
    if (activation_radius < min_radius || activation_radius > max_radius) {
      fail(ErrorKind::config, "activation radius A must lie in [1, 10], got " +
                                  std::to_string(activation_radius));
    }
    if (excitation_radius < min_radius || excitation_radius > max_radius) {
      fail(ErrorKind::config, "excitation radius E must lie in [1, 10], got " +
                                  std::to_string(excitation_radius));
    }
    if (!(motion_confidence >= 0.0 && motion_confidence <= 1.0)) {
      fail(ErrorKind::config, "motion confidence gamma must lie in [0, 1]");
    }
    if (!(inhibition_factor >= min_inhibition &&
          inhibition_factor <= max_inhibition)) {
      fail(ErrorKind::config, "inhibition factor phi must lie in [1e-5, 5e-3]");
    }
    for (const auto& s : {sigma_x, sigma_y}) {
      if (s && !(*s > 0.0 && std::isfinite(*s))) {
        fail(ErrorKind::config, "Gaussian sigma must be positive");
      }
    }
  }

 private:
  double sigma_for(std::size_t axis, int radius) const {
    const auto& explicit_sigma = axis == 0 ? sigma_x : sigma_y;
    return explicit_sigma ? *explicit_sigma : 0.5 * radius;
  }
};

/// Nonnegative activations on a ring (Dim = 1) or torus (Dim = 2).
/// Cells are stored x-fastest.
template <std::size_t Dim>
class Activity {
  static_assert(Dim == 1 || Dim == 2, "rings and tori only");

 public:
  using Index = std::array<int, Dim>;

  Activity() = default;

  explicit Activity(Index extents) : extents_(extents) {
    std::size_t count = 1;
    for (int n : extents) {
      if (n <= 0) {
        fail(ErrorKind::config, "network dimensions must be positive");
      }
      count *= static_cast<std::size_t>(n);
    }
    values_.assign(count, 0.0);
  }

  const Index& extents() const { return extents_; }
  int extent(std::size_t axis) const { return extents_[axis]; }
  std::size_t size() const { return values_.size(); }

  std::size_t flat(const Index& idx) const {
    if constexpr (Dim == 1) {
      return static_cast<std::size_t>(idx[0]);
    } else {
      return static_cast<std::size_t>(idx[1]) * extents_[0] + idx[0];
    }
  }

  Index unflat(std::size_t k) const {
    if constexpr (Dim == 1) {
      return {static_cast<int>(k)};
    } else {
      return {static_cast<int>(k % extents_[0]),
              static_cast<int>(k / extents_[0])};
    }
  }

  Index wrapped(Index idx) const {
    for (std::size_t a = 0; a < Dim; ++a) idx[a] = wrap_index(idx[a], extents_[a]);
    return idx;
  }

  double& operator[](const Index& idx) { return values_[flat(idx)]; }
  double operator[](const Index& idx) const { return values_[flat(idx)]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  double sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

  double norm() const {
    double s = 0.0;
    for (double v : values_) s += v * v;
    return std::sqrt(s);
  }

  bool any_positive() const {
    return std::any_of(values_.begin(), values_.end(), [](double v) { return v > 0.0; });
  }

  friend bool operator==(const Activity&, const Activity&) = default;

 private:
  Index extents_{};
  std::vector<double> values_;
};

using ActivityRing = Activity<1>;
using ActivityGrid = Activity<2>;

/// Shift in neurons split into an integer offset and a fraction in [0, 1)
/// per axis (floor decomposition, so negative motion has a whole part of -1
/// or lower).
template <std::size_t Dim>
struct ShiftCommand {
  std::array<int, Dim> whole{};
  std::array<double, Dim> fraction{};

  static ShiftCommand from_offset(const std::array<double, Dim>& offset) {
    ShiftCommand cmd;
    for (std::size_t a = 0; a < Dim; ++a) {
      if (!std::isfinite(offset[a])) {
        fail(ErrorKind::input, "shift offset must be finite");
      }
      const double base = std::floor(offset[a]);
      double frac = offset[a] - base;
      int whole = static_cast<int>(base);
      if (frac >= 1.0) {
        frac = 0.0;
        ++whole;
      }
      cmd.whole[a] = whole;
      cmd.fraction[a] = frac;
    }
    return cmd;
  }

  std::array<double, Dim> offset() const {
    std::array<double, Dim> out{};
    for (std::size_t a = 0; a < Dim; ++a) out[a] = whole[a] + fraction[a];
    return out;
  }

  bool is_zero() const {
    for (std::size_t a = 0; a < Dim; ++a) {
      if (whole[a] != 0 || fraction[a] != 0.0) return false;
    }
    return true;
  }
};

/// Gaussian bump of radius A around `center`, zero outside the window.
/// Window cells reached by more than one offset (windows wider than the
/// network) keep the largest value. L2-normalized.
template <std::size_t Dim>
Activity<Dim> init_gaussian(const typename Activity<Dim>::Index& extents,
                            const typename Activity<Dim>::Index& center,
                            const NetworkParams& params) {
  Activity<Dim> grid(extents);
  if (params.activation_radius < 1) {
    fail(ErrorKind::config, "activation radius must be at least 1");
  }
  for (std::size_t a = 0; a < Dim; ++a) {
    if (center[a] < 0 || center[a] >= extents[a]) {
      fail(ErrorKind::input, "bump center outside the network");
    }
  }
  const int r = params.activation_radius;
  std::array<double, Dim> inv_two_var{};
  for (std::size_t a = 0; a < Dim; ++a) {
    const double s = params.init_sigma(a);
    inv_two_var[a] = 1.0 / (2.0 * s * s);
  }

  auto visit = [&](const std::array<int, Dim>& offset) {
    double exponent = 0.0;
    typename Activity<Dim>::Index idx{};
    for (std::size_t a = 0; a < Dim; ++a) {
      exponent -= offset[a] * offset[a] * inv_two_var[a];
      idx[a] = wrap_index(center[a] + offset[a], extents[a]);
    }
    double& cell = grid[idx];
    cell = std::max(cell, std::exp(exponent));
  };

  if constexpr (Dim == 1) {
    for (int dx = -r; dx <= r; ++dx) visit({dx});
  } else {
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx) visit({dx, dy});
    }
  }

  const double n = grid.norm();
  for (double& v : grid.values()) v /= n;
  return grid;
}

/// Copies every active neuron to its integer-shifted position.
template <std::size_t Dim>
Activity<Dim> shift_copy(const Activity<Dim>& grid, const ShiftCommand<Dim>& cmd) {
  Activity<Dim> out(grid.extents());
  const auto src = grid.values();
  for (std::size_t k = 0; k < src.size(); ++k) {
    if (src[k] <= 0.0) continue;
    auto idx = grid.unflat(k);
    for (std::size_t a = 0; a < Dim; ++a) idx[a] += cmd.whole[a];
    out[grid.wrapped(idx)] = src[k];
  }
  return out;
}

/// Pushes each cell forward by the fractional part of the command using
/// separable linear interpolation, then scales by gamma. Total mass becomes
/// gamma times the input mass.
template <std::size_t Dim>
Activity<Dim> fractional_shift(const Activity<Dim>& field, const ShiftCommand<Dim>& cmd,
                               double gamma) {
  for (std::size_t a = 0; a < Dim; ++a) {
    if (!(cmd.fraction[a] >= 0.0 && cmd.fraction[a] < 1.0)) {
      fail(ErrorKind::input, "fractional shift must lie in [0, 1)");
    }
  }
  Activity<Dim> out(field.extents());
  const auto src = field.values();
  for (std::size_t k = 0; k < src.size(); ++k) {
    const double v = src[k];
    if (v == 0.0) continue;
    const auto base = field.unflat(k);
    for (unsigned corner = 0; corner < (1u << Dim); ++corner) {
      double w = gamma * v;
      auto idx = base;
      for (std::size_t a = 0; a < Dim; ++a) {
        const bool forward = (corner >> a) & 1u;
        const double f = cmd.fraction[a];
        w *= forward ? f : 1.0 - f;
        idx[a] += forward ? 1 : 0;
      }
      if (w != 0.0) out[field.wrapped(idx)] += w;
    }
  }
  return out;
}

namespace detail {

inline std::vector<double> gaussian_taps(int radius, double sigma) {
  std::vector<double> taps(2 * radius + 1);
  for (int d = -radius; d <= radius; ++d) {
    taps[d + radius] = std::exp(-(d * d) / (2.0 * sigma * sigma));
  }
  return taps;
}

}  // namespace detail

/// Every active neuron excites its (2E+1)-wide window with a Gaussian of its
/// own weight. Computed separably: an x pass over active sources, then a y
/// pass over the partial sums.
template <std::size_t Dim>
Activity<Dim> excitation(const Activity<Dim>& field, const NetworkParams& params) {
  const int r = params.excitation_radius;
  const auto taps_x = detail::gaussian_taps(r, params.excitation_sigma(0));
  const auto src = field.values();

  Activity<Dim> pass_x(field.extents());
  const int nx = field.extent(0);
  for (std::size_t k = 0; k < src.size(); ++k) {
    const double v = src[k];
    if (v <= 0.0) continue;
    auto idx = field.unflat(k);
    const int x0 = idx[0];
    for (int d = -r; d <= r; ++d) {
      idx[0] = wrap_index(x0 + d, nx);
      pass_x[idx] += v * taps_x[d + r];
    }
  }
  if constexpr (Dim == 1) {
    return pass_x;
  } else {
    const auto taps_y = detail::gaussian_taps(r, params.excitation_sigma(1));
    const int ny = field.extent(1);
    Activity<Dim> out(field.extents());
    const auto mid = pass_x.values();
    for (std::size_t k = 0; k < mid.size(); ++k) {
      const double v = mid[k];
      if (v <= 0.0) continue;
      auto idx = field.unflat(k);
      const int y0 = idx[1];
      for (int d = -r; d <= r; ++d) {
        idx[1] = wrap_index(y0 + d, ny);
        out[idx] += v * taps_y[d + r];
      }
    }
    return out;
  }
}

/// Global inhibition: total activity scaled by phi.
template <std::size_t Dim>
double inhibition(const Activity<Dim>& field, double phi) {
  return field.sum() * phi;
}

/// Circular mean of the activity marginal along `axis`, in [0, n).
template <std::size_t Dim>
double decode_index(const Activity<Dim>& activity, std::size_t axis = 0) {
  const int n = activity.extent(axis);
  std::vector<double> marginal(n, 0.0);
  const auto v = activity.values();
  double total = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (v[k] <= 0.0) continue;
    marginal[activity.unflat(k)[axis]] += v[k];
    total += v[k];
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    fail(ErrorKind::undecodable, "no positive activity to decode");
  }
  const double step = 2.0 * std::numbers::pi / n;
  double s = 0.0;
  double c = 0.0;
  for (int i = 0; i < n; ++i) {
    if (marginal[i] == 0.0) continue;
    s += marginal[i] * std::sin(step * i);
    c += marginal[i] * std::cos(step * i);
  }
  if (std::hypot(s, c) <= 1e-12 * total) {
    fail(ErrorKind::undecodable, "activity has no dominant direction");
  }
  double idx = std::atan2(s, c) / step;
  if (idx < 0.0) idx += n;
  if (idx >= n) idx -= n;
  return idx;
}

template <std::size_t Dim>
std::array<double, Dim> decode(const Activity<Dim>& activity) {
  std::array<double, Dim> out{};
  for (std::size_t a = 0; a < Dim; ++a) out[a] = decode_index(activity, a);
  return out;
}

template <std::size_t Dim>
struct StepOutcome {
  Activity<Dim> activity;
  bool fault = false;
};

/// One network update. A state that vanishes after inhibition is rebuilt as
/// a fresh bump at the position decoded from `current`, and flagged.
template <std::size_t Dim>
StepOutcome<Dim> step(const Activity<Dim>& current, const ShiftCommand<Dim>& cmd,
                      const NetworkParams& params) {
  const auto copied = shift_copy(current, cmd);
  auto injected = fractional_shift(copied, cmd, params.motion_confidence);
  {
    auto inj = injected.values();
    const auto cur = current.values();
    for (std::size_t k = 0; k < inj.size(); ++k) {
      if (inj[k] <= 0.0) inj[k] = cur[k];
    }
  }
  const auto excited = excitation(injected, params);

  Activity<Dim> total = injected;
  {
    auto t = total.values();
    const auto e = excited.values();
    for (std::size_t k = 0; k < t.size(); ++k) t[k] += e[k];
  }
  const double mu = inhibition(total, params.inhibition_factor);
  double sq = 0.0;
  for (double& v : total.values()) {
    v = std::max(v - mu, 0.0);
    sq += v * v;
  }
  const double n = std::sqrt(sq);
  if (n > 0.0 && std::isfinite(n)) {
    for (double& v : total.values()) v /= n;
    return {std::move(total), false};
  }

  typename Activity<Dim>::Index center{};
  const auto last = decode(current);
  for (std::size_t a = 0; a < Dim; ++a) {
    center[a] = wrap_index(static_cast<int>(std::lround(last[a])), current.extent(a));
  }
  return {init_gaussian<Dim>(current.extents(), center, params), true};
}

/// A single attractor network with its fault counter. Single writer.
template <std::size_t Dim>
class AttractorNetwork {
 public:
  using Index = typename Activity<Dim>::Index;

  AttractorNetwork(const Index& extents, const Index& center, const NetworkParams& params)
      : params_(params) {
    params_.validate();
    activity_ = init_gaussian<Dim>(extents, center, params_);
  }

  void step(const ShiftCommand<Dim>& cmd) {
    auto outcome = mcan::step(activity_, cmd, params_);
    activity_ = std::move(outcome.activity);
    if (outcome.fault) ++faults_;
  }

  std::array<double, Dim> decode() const { return mcan::decode(activity_); }

  const Activity<Dim>& activity() const { return activity_; }
  const NetworkParams& params() const { return params_; }
  std::size_t fault_count() const { return faults_; }
  std::size_t neuron_count() const { return activity_.size(); }

 private:
  NetworkParams params_;
  Activity<Dim> activity_;
  std::size_t faults_ = 0;
};

}  // namespace mcan
