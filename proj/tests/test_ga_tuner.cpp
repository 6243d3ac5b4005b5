#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "mcan/config_io.hpp"
#include "mcan/ga_tuner.hpp"

using namespace mcan;

namespace {

const Genome target{{6.5, 3.25, 0.4, 0.001}};

double sphere(const Genome& g) {
  const auto r = default_gene_ranges();
  double s = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const double d = (g.genes[i] - target.genes[i]) / (r[i].hi - r[i].lo);
    s += d * d;
  }
  return -s;
}

GaConfig small_config(std::uint64_t seed) {
  GaConfig c;
  c.rng_seed = seed;
  c.parallel_workers = 1;
  return c;
}

}  // namespace

TEST(Genome, RoundsRadiiOnUse) {
  const auto p = Genome{{2.6, 7.4, 0.5, 0.001}}.to_params();
  EXPECT_EQ(p.activation_radius, 3);
  EXPECT_EQ(p.excitation_radius, 7);
  EXPECT_EQ(Genome::from_params(p).genes[gene_gamma], 0.5);
}

TEST(Genome, JsonRoundTripAndRangeCheck) {
  const Genome g{{2.5, 9.0, 0.75, 3e-4}};
  EXPECT_EQ(genome_from_json(genome_to_json(g)), g);
  auto j = genome_to_json(g);
  j["inhibition_factor"] = 0.5;
  EXPECT_THROW(genome_from_json(j), Error);
  j.erase("inhibition_factor");
  EXPECT_THROW(genome_from_json(j), Error);
}

TEST(Mutate, ZeroRateIsIdentity) {
  Rng rng(1);
  const auto ranges = default_gene_ranges();
  for (int i = 0; i < 100; ++i) {
    const auto g = random_genome(ranges, rng);
    EXPECT_EQ(mutate(g, 0.0, 0.1, ranges, rng), g);
  }
}

TEST(Mutate, OutputAlwaysInRange) {
  Rng rng(2);
  const auto ranges = default_gene_ranges();
  MutationStats stats;
  for (int i = 0; i < 2000; ++i) {
    const auto g = random_genome(ranges, rng);
    EXPECT_TRUE(mutate(g, 1.0, 0.5, ranges, rng, &stats).within(ranges));
  }
  // Huge sigma forces the clamp fallback.
  const Genome edge{{1.0, 10.0, 0.0, 0.005}};
  EXPECT_TRUE(mutate(edge, 1.0, 1e6, ranges, rng, &stats).within(ranges));
  EXPECT_GT(stats.clamped, 0u);
}

TEST(Mutate, VanishingSigmaBarelyMoves) {
  Rng rng(3);
  const auto ranges = default_gene_ranges();
  const Genome g{{5.0, 5.0, 0.5, 0.001}};
  const auto m = mutate(g, 1.0, 1e-12, ranges, rng);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(m.genes[i], g.genes[i], 1e-6 * g.genes[i]);
}

TEST(SelectParents, TopQuarterWithIndexTieBreak) {
  const std::vector<double> f{-3, -1, -2, -4};
  EXPECT_EQ(select_parents(f), std::vector<std::size_t>{1});
  const std::vector<double> flat(8, 1.0);
  EXPECT_EQ(select_parents(flat), (std::vector<std::size_t>{0, 1}));
  std::vector<double> many(24);
  for (std::size_t i = 0; i < many.size(); ++i) many[i] = static_cast<double>(i % 7);
  EXPECT_EQ(select_parents(many).size(), 6u);
  const std::vector<double> odd{1, 2, 3, 4, 5};
  EXPECT_EQ(select_parents(odd).size(), 2u);
  EXPECT_THROW(select_parents(std::vector<double>{}), Error);
}

TEST(SelectParents, NonFiniteRanksLast) {
  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<double> f{-inf, -5, -inf, -6};
  EXPECT_EQ(select_parents(f), std::vector<std::size_t>{1});
}

TEST(GaConfig, ValidatesPopulationArithmetic) {
  GaConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.parent_count(), 6u);
  c.population_size = 25;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.mutation_rate = 1.5;
  EXPECT_THROW(c.validate(), Error);
}

TEST(GaConfig, JsonDefaultsAndOverrides) {
  const auto c = ga_config_from_json(Json{{"max_generations", 5}, {"fitness_trial", {{"steps", 50}}}});
  EXPECT_EQ(c.max_generations, 5);
  EXPECT_EQ(c.fitness_trial.steps, 50);
  EXPECT_EQ(c.population_size, 24);
  const auto back = ga_config_from_json(ga_config_to_json(c));
  EXPECT_EQ(back.max_generations, 5);
  EXPECT_THROW(ga_config_from_json(Json{{"population_size", 10}}), Error);
}

TEST(RunGa, PopulationArithmeticPerGeneration) {
  auto c = small_config(4);
  c.max_generations = 5;
  const auto r = run_ga(c, sphere);
  ASSERT_EQ(r.history.size(), 5u);
  for (const auto& g : r.history) {
    EXPECT_EQ(g.parents, 6u);
    EXPECT_EQ(g.children, 18u);
  }
  // Parents keep cached fitness: 24 first, then 18 per generation.
  EXPECT_EQ(r.evaluations, 24u + 4u * 18u);
}

TEST(RunGa, ZeroMutationKeepsChildrenEqualAndBestMonotone) {
  auto c = small_config(5);
  c.mutation_rate = 0.0;
  c.max_generations = 6;
  const auto r = run_ga(c, sphere);
  for (std::size_t i = 1; i < r.history.size(); ++i) {
    EXPECT_EQ(r.history[i].best_fitness, r.history[0].best_fitness);
  }
}

TEST(RunGa, BestIsNonDecreasingAndSphereTargetRecovered) {
  const auto r = run_ga(small_config(6), sphere);
  for (std::size_t i = 1; i < r.history.size(); ++i) {
    EXPECT_GE(r.history[i].best_fitness, r.history[i - 1].best_fitness);
  }
  const auto ranges = default_gene_ranges();
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_LE(std::abs(r.best.genes[i] - target.genes[i]), 0.05 * (ranges[i].hi - ranges[i].lo))
        << "gene " << i;
  }
}

TEST(RunGa, DeterministicRegardlessOfWorkerCount) {
  auto a = small_config(7);
  auto b = small_config(7);
  b.parallel_workers = 5;
  const auto ra = run_ga(a, sphere);
  const auto rb = run_ga(b, sphere);
  EXPECT_EQ(ra.best, rb.best);
  ASSERT_EQ(ra.history.size(), rb.history.size());
  for (std::size_t i = 0; i < ra.history.size(); ++i) {
    EXPECT_EQ(ra.history[i].best_fitness, rb.history[i].best_fitness);
    EXPECT_EQ(ra.history[i].mean_fitness, rb.history[i].mean_fitness);
  }
}

TEST(RunGa, NonFiniteFitnessNeverSelected) {
  auto c = small_config(8);
  c.max_generations = 3;
  const auto r = run_ga(c, [](const Genome& g) {
    return g.genes[gene_gamma] < 0.5 ? std::numeric_limits<double>::quiet_NaN() : g.genes[gene_gamma];
  });
  EXPECT_GE(r.best.genes[gene_gamma], 0.5);
  EXPECT_TRUE(std::isfinite(r.best_fitness));
}

TEST(Fitness, DeterministicForFixedSeed) {
  TrialSpec t;
  t.steps = 40;
  t.seed = 11;
  const Genome g{{3.0, 3.0, 1.0, 5e-5}};
  const auto a = fitness_path_integration(g, t);
  const auto b = fitness_path_integration(g, t);
  EXPECT_EQ(a.fitness, b.fitness);
  EXPECT_FALSE(a.fault);
  EXPECT_LE(a.fitness, 0.0);
  t.topology = TrialSpec::Topology::ring;
  t.steps = 200;
  EXPECT_EQ(fitness_path_integration(g, t).fitness, fitness_path_integration(g, t).fitness);
}

TEST(Fitness, OutOfRangeGenomeScoresWorst) {
  TrialSpec t;
  t.steps = 5;
  const auto r = fitness_path_integration(Genome{{0.0, 3.0, 1.0, 5e-5}}, t);
  EXPECT_TRUE(r.fault);
  EXPECT_EQ(r.fitness, -std::numeric_limits<double>::infinity());
}

TEST(Fitness, SadArithmeticForConstantOffset) {
  std::vector<double> est(100, 1.0);
  std::vector<double> truth(100, 0.0);
  std::vector<Point2> pe(100, Point2{1.0, 0.0});
  std::vector<Point2> pt(100, Point2{0.0, 0.0});
  EXPECT_DOUBLE_EQ(-sad(pe, pt), -100.0);
  EXPECT_DOUBLE_EQ(-sad_heading(est, truth), -100.0);
  EXPECT_DOUBLE_EQ(sad(pt, pt), 0.0);
}

TEST(MixSeed, StreamsDiffer) {
  EXPECT_NE(mix_seed(0, 0), mix_seed(0, 1));
  EXPECT_NE(mix_seed(0, 0), mix_seed(1, 0));
  EXPECT_EQ(mix_seed(3, 4), mix_seed(3, 4));
}
