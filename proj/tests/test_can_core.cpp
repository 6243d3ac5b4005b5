#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mcan/can_core.hpp"
#include "test_support.hpp"

using namespace mcan;

namespace {

// Direct evaluation of the windowed Gaussian, before normalization.
double gaussian_oracle(int x, int y, int cx, int cy, int n, int radius, double sigma) {
  double best = 0.0;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (((cx + dx) % n + n) % n == x && ((cy + dy) % n + n) % n == y) {
        best = std::max(best, std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma)));
      }
    }
  }
  return best;
}

// Circular mean over every neuron, one at a time, without marginals.
double circular_mean_oracle(const ActivityGrid& g, std::size_t axis) {
  const int n = g.extent(axis);
  double s = 0.0;
  double c = 0.0;
  for (int y = 0; y < g.extent(1); ++y) {
    for (int x = 0; x < g.extent(0); ++x) {
      const double w = g[{x, y}];
      const int i = axis == 0 ? x : y;
      s += w * std::sin(2.0 * std::numbers::pi * i / n);
      c += w * std::cos(2.0 * std::numbers::pi * i / n);
    }
  }
  double a = std::atan2(s, c) * n / (2.0 * std::numbers::pi);
  return a < 0.0 ? a + n : a;
}

// Explicit bilinear push of a field by fractions (fx, fy).
ActivityGrid bilinear_oracle(const ActivityGrid& f, double fx, double fy, double gamma) {
  ActivityGrid out(f.extents());
  const int nx = f.extent(0);
  const int ny = f.extent(1);
  for (int y = 0; y < ny; ++y) {
    for (int x = 0; x < nx; ++x) {
      const double v = f[{x, y}];
      out[{x, y}] += gamma * v * (1 - fx) * (1 - fy);
      out[{(x + 1) % nx, y}] += gamma * v * fx * (1 - fy);
      out[{x, (y + 1) % ny}] += gamma * v * (1 - fx) * fy;
      out[{(x + 1) % nx, (y + 1) % ny}] += gamma * v * fx * fy;
    }
  }
  return out;
}

ActivityGrid translate(const ActivityGrid& g, int dx, int dy) {
  ActivityGrid out(g.extents());
  for (int y = 0; y < g.extent(1); ++y) {
    for (int x = 0; x < g.extent(0); ++x) out[out.wrapped({x + dx, y + dy})] = g[{x, y}];
  }
  return out;
}

ActivityGrid random_sparse(std::mt19937_64& rng, int n, int count) {
  ActivityGrid g({n, n});
  std::uniform_int_distribution<int> pos(0, n - 1);
  std::uniform_real_distribution<double> w(0.01, 1.0);
  for (int i = 0; i < count; ++i) g[{pos(rng), pos(rng)}] = w(rng);
  return g;
}

}  // namespace

TEST(InitGaussian, PeakAtCenterAndZeroOutsideWindow) {
  NetworkParams p;
  p.activation_radius = 5;
  const auto g = init_gaussian<2>({100, 100}, {50, 50}, p);
  double top = 0.0;
  for (double v : g.values()) top = std::max(top, v);
  EXPECT_EQ((g[{50, 50}]), top);
  EXPECT_EQ((g[{70, 70}]), 0.0);
  EXPECT_NEAR(g.norm(), 1.0, 1e-12);
}

TEST(InitGaussian, WrapsAcrossEdgesLikeDirectFormula) {
  NetworkParams p;
  p.activation_radius = 3;
  const auto g = init_gaussian<2>({100, 100}, {0, 0}, p);
  EXPECT_GT((g[{98, 98}]), 0.0);
  const double scale = g[{0, 0}];  // oracle value there is exp(0) = 1
  for (int y : {97, 98, 99, 0, 1, 2, 3, 4}) {
    for (int x : {96, 97, 98, 99, 0, 1, 2, 3}) {
      EXPECT_NEAR((g[{x, y}]), scale * gaussian_oracle(x, y, 0, 0, 100, 3, 1.5), 1e-12)
          << x << "," << y;
    }
  }
}

TEST(InitGaussian, RejectsInvalidGeometry) {
  NetworkParams p;
  EXPECT_THROW(init_gaussian<2>({0, 10}, {0, 0}, p), Error);
  EXPECT_THROW(init_gaussian<2>({10, 10}, {10, 0}, p), Error);
}

TEST(ShiftCommand, SplitsIntoWholeAndFraction) {
  const auto c = ShiftCommand<2>::from_offset({2.25, -0.25});
  EXPECT_EQ(c.whole[0], 2);
  EXPECT_DOUBLE_EQ(c.fraction[0], 0.25);
  EXPECT_EQ(c.whole[1], -1);
  EXPECT_DOUBLE_EQ(c.fraction[1], 0.75);
  EXPECT_EQ(c.offset()[0], 2.25);
  EXPECT_EQ(c.offset()[1], -0.25);
  EXPECT_THROW(ShiftCommand<1>::from_offset({NAN}), Error);
}

TEST(ShiftCopy, SinglePointAndWraparound) {
  ActivityGrid g({100, 100});
  g[{10, 10}] = 1.0;
  const auto a = shift_copy(g, ShiftCommand<2>{{2, 3}, {0.0, 0.0}});
  EXPECT_EQ((a[{12, 13}]), 1.0);
  EXPECT_DOUBLE_EQ(a.sum(), 1.0);

  ActivityGrid h({100, 100});
  h[{99, 99}] = 0.5;
  const auto b = shift_copy(h, ShiftCommand<2>{{1, 1}, {0.0, 0.0}});
  EXPECT_EQ((b[{0, 0}]), 0.5);
  EXPECT_DOUBLE_EQ(b.sum(), 0.5);
}

TEST(ShiftCopy, IdentityAndMassConservation) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = random_sparse(rng, 37, 40);
    EXPECT_EQ(shift_copy(g, ShiftCommand<2>{}), g);
    std::uniform_int_distribution<int> off(-200, 200);
    const ShiftCommand<2> cmd{{off(rng), off(rng)}, {0.0, 0.0}};
    EXPECT_NEAR(shift_copy(g, cmd).sum(), g.sum(), 1e-12);
  }
}

TEST(FractionalShift, ZeroFractionAndGammaScaling) {
  std::mt19937_64 rng(4);
  const auto g = random_sparse(rng, 20, 15);
  EXPECT_EQ(fractional_shift(g, ShiftCommand<2>{}, 1.0), g);
  const auto half = fractional_shift(g, ShiftCommand<2>{}, 0.5);
  for (std::size_t k = 0; k < g.size(); ++k) EXPECT_DOUBLE_EQ(half.values()[k], 0.5 * g.values()[k]);
}

TEST(FractionalShift, QuarterSplitMatchesBilinearWeights) {
  ActivityGrid g({20, 20});
  g[{5, 5}] = 1.0;
  const auto f = fractional_shift(g, ShiftCommand<2>{{0, 0}, {0.25, 0.25}}, 1.0);
  EXPECT_NEAR((f[{5, 5}]), 0.5625, 1e-15);
  EXPECT_NEAR((f[{6, 5}]), 0.1875, 1e-15);
  EXPECT_NEAR((f[{5, 6}]), 0.1875, 1e-15);
  EXPECT_NEAR((f[{6, 6}]), 0.0625, 1e-15);
}

TEST(FractionalShift, MatchesExplicitBilinearOracle) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    const auto g = random_sparse(rng, 16, 30);
    const double fx = u(rng);
    const double fy = u(rng);
    const double gamma = u(rng);
    const auto got = fractional_shift(g, ShiftCommand<2>{{0, 0}, {fx, fy}}, gamma);
    const auto want = bilinear_oracle(g, fx, fy, gamma);
    for (std::size_t k = 0; k < g.size(); ++k) {
      ASSERT_NEAR(got.values()[k], want.values()[k], 1e-12);
    }
    EXPECT_NEAR(got.sum(), gamma * g.sum(), 1e-12);
  }
}

TEST(FractionalShift, FractionNearOneApproachesNextIntegerShift) {
  std::mt19937_64 rng(6);
  const auto g = random_sparse(rng, 30, 25);
  const double f = 1.0 - 1e-12;
  const auto near_one = fractional_shift(shift_copy(g, ShiftCommand<2>{{2, -1}, {0.0, 0.0}}),
                                         ShiftCommand<2>{{2, -1}, {f, f}}, 1.0);
  const auto next = shift_copy(g, ShiftCommand<2>{{3, 0}, {0.0, 0.0}});
  for (std::size_t k = 0; k < g.size(); ++k) {
    ASSERT_NEAR(near_one.values()[k], next.values()[k], 1e-9);
  }
}

TEST(FractionalShift, RejectsFractionOutsideUnitInterval) {
  ActivityRing r({10});
  EXPECT_THROW(fractional_shift(r, ShiftCommand<1>{{0}, {1.0}}, 1.0), Error);
  EXPECT_THROW(fractional_shift(r, ShiftCommand<1>{{0}, {-0.1}}, 1.0), Error);
}

TEST(Excitation, ZeroFieldStaysZero) {
  NetworkParams p;
  const auto e = excitation(ActivityGrid({30, 30}), p);
  EXPECT_EQ(e.sum(), 0.0);
}

TEST(Excitation, SingleNeuronPeakIsItsWeight) {
  NetworkParams p;
  p.excitation_radius = 3;
  ActivityGrid g({100, 100});
  g[{50, 50}] = 1.0;
  const auto e = excitation(g, p);
  EXPECT_DOUBLE_EQ((e[{50, 50}]), 1.0);
  EXPECT_EQ((e[{54, 50}]), 0.0);
  EXPECT_GT((e[{53, 53}]), 0.0);
}

TEST(Excitation, TwoNeuronsMatchDirectSum) {
  NetworkParams p;
  p.excitation_radius = 3;
  p.sigma_x = 2.0;
  p.sigma_y = 2.0;
  ActivityGrid g({100, 100});
  g[{50, 50}] = 1.0;
  g[{52, 50}] = 1.0;
  const auto e = excitation(g, p);
  EXPECT_NEAR((e[{51, 50}]), 2.0 * std::exp(-1.0 / 8.0), 1e-12);
}

TEST(Excitation, MatchesDoubleLoopOracleWithWrap) {
  NetworkParams p;
  p.excitation_radius = 4;
  std::mt19937_64 rng(7);
  const auto g = random_sparse(rng, 25, 20);
  const auto e = excitation(g, p);
  const double s = p.excitation_sigma(0);
  ActivityGrid want({25, 25});
  for (int y = 0; y < 25; ++y) {
    for (int x = 0; x < 25; ++x) {
      const double w = g[{x, y}];
      if (w <= 0.0) continue;
      for (int dy = -4; dy <= 4; ++dy) {
        for (int dx = -4; dx <= 4; ++dx) {
          want[want.wrapped({x + dx, y + dy})] += w * std::exp(-(dx * dx + dy * dy) / (2 * s * s));
        }
      }
    }
  }
  for (std::size_t k = 0; k < g.size(); ++k) ASSERT_NEAR(e.values()[k], want.values()[k], 1e-12);
}

TEST(Inhibition, IsScaledSum) {
  ActivityRing r({4});
  EXPECT_EQ(inhibition(r, 0.005), 0.0);
  r[{0}] = 0.25;
  r[{1}] = 0.75;
  EXPECT_DOUBLE_EQ(inhibition(r, 0.005), 0.005);
  r[{2}] = 36.2;
  EXPECT_DOUBLE_EQ(inhibition(r, 0.001), 0.0372);
}

TEST(DecodeIndex, SinglePointsAndWrappedMidpoint) {
  ActivityRing r({100});
  r[{42}] = 1.0;
  EXPECT_NEAR(decode_index(r), 42.0, 1e-12);
  ActivityRing w({100});
  w[{99}] = 1.0;
  w[{1}] = 1.0;
  const double d = decode_index(w);
  EXPECT_NEAR(std::min(d, 100.0 - d), 0.0, 1e-9);
}

TEST(DecodeIndex, TwoEqualPeaksDecodeBetween) {
  ActivityRing r({100});
  for (int i = 15; i <= 26; ++i) r[{i}] = std::exp(-(i - 20.5) * (i - 20.5) / 4.0);
  EXPECT_NEAR(decode_index(r), 20.5, 1e-6);
}

TEST(DecodeIndex, MatchesBruteForceOnRandomPatterns) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> center(0, 99);
  for (int trial = 0; trial < 100; ++trial) {
    ActivityGrid g({100, 100});
    if (trial % 2 == 0) {
      NetworkParams p;
      p.activation_radius = 1 + trial % 10;
      // Centers near the edges produce bumps split across the wrap.
      const int cx = trial % 4 == 0 ? 99 - trial % 3 : center(rng);
      g = init_gaussian<2>({100, 100}, {cx, center(rng)}, p);
    } else {
      g = random_sparse(rng, 100, 5 + trial);
    }
    for (std::size_t axis = 0; axis < 2; ++axis) {
      const double got = decode_index(g, axis);
      const double want = circular_mean_oracle(g, axis);
      double diff = std::abs(got - want);
      diff = std::min(diff, 100.0 - diff);
      ASSERT_LT(diff, 1e-9) << "trial " << trial << " axis " << axis;
    }
  }
}

TEST(DecodeIndex, ZeroActivityIsUndecodable) {
  ActivityGrid g({10, 10});
  try {
    decode_index(g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::undecodable);
  }
}

TEST(Step, KeepsUnitNormAndNonnegativity) {
  NetworkParams p;
  p.excitation_radius = 3;
  p.inhibition_factor = 1e-4;
  auto g = init_gaussian<2>({60, 60}, {30, 30}, p);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 50; ++i) {
    const auto out = step(g, ShiftCommand<2>::from_offset({u(rng), u(rng)}), p);
    g = out.activity;
    EXPECT_NEAR(g.norm(), 1.0, 1e-9);
    for (double v : g.values()) ASSERT_GE(v, 0.0);
  }
}

TEST(Step, TranslationEquivariantForIntegerShifts) {
  NetworkParams p;
  p.excitation_radius = 2;
  p.inhibition_factor = 5e-4;
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    auto g = init_gaussian<2>({40, 40}, {7, 33}, p);
    g = step(g, ShiftCommand<2>::from_offset({0.4, 1.3}), p).activity;
    std::uniform_int_distribution<int> off(-50, 50);
    const int tx = off(rng);
    const int ty = off(rng);
    const ShiftCommand<2> cmd = ShiftCommand<2>::from_offset({1.6, -0.7});
    const auto a = translate(step(g, cmd, p).activity, tx, ty);
    const auto b = step(translate(g, tx, ty), cmd, p).activity;
    for (std::size_t k = 0; k < a.size(); ++k) ASSERT_NEAR(a.values()[k], b.values()[k], 1e-9);
  }
}

TEST(Step, IntegerCommandsMoveTheBump) {
  const auto p = test_support::tuned_params_or(test_support::fallback_2d());
  AttractorNetwork<2> net({100, 100}, {50, 50}, p);
  for (int i = 0; i < 10; ++i) net.step(ShiftCommand<2>{{1, 0}, {0.0, 0.0}});
  const auto d = net.decode();
  EXPECT_NEAR(d[0], 60.0, 0.5);
  EXPECT_NEAR(d[1], 50.0, 0.5);
  EXPECT_EQ(net.fault_count(), 0u);
}

TEST(Step, ZeroCommandIsStable) {
  const auto p = test_support::tuned_params_or(test_support::fallback_2d());
  AttractorNetwork<2> net({100, 100}, {50, 50}, p);
  auto prev = net.decode();
  for (int i = 0; i < 100; ++i) {
    net.step(ShiftCommand<2>{});
    const auto now = net.decode();
    EXPECT_LT(std::hypot(now[0] - prev[0], now[1] - prev[1]), 0.1);
    prev = now;
  }
}

TEST(Step, CollapseReinitializesAtDecodedPositionAndFlagsFault) {
  NetworkParams p;
  p.activation_radius = 2;
  p.excitation_radius = 1;
  p.inhibition_factor = 0.005;
  // A flat field: every neuron sits below the inhibition level after the
  // update, so the state vanishes.
  ActivityRing flat({1000});
  for (double& v : flat.values()) v = 1.0;
  flat[{700}] = 1.0001;
  const auto out = step(flat, ShiftCommand<1>{}, p);
  EXPECT_TRUE(out.fault);
  EXPECT_NEAR(out.activity.norm(), 1.0, 1e-12);
  EXPECT_NEAR(decode_index(out.activity), std::round(decode_index(flat)), 1e-9);
}

TEST(NetworkParams, ValidatesRanges) {
  NetworkParams p;
  EXPECT_NO_THROW(p.validate());
  p.activation_radius = 11;
  EXPECT_THROW(p.validate(), Error);
  p = {};
  p.motion_confidence = 1.5;
  EXPECT_THROW(p.validate(), Error);
  p = {};
  p.inhibition_factor = 0.01;
  EXPECT_THROW(p.validate(), Error);
  p = {};
  p.sigma_x = 0.0;
  EXPECT_THROW(p.validate(), Error);
}
