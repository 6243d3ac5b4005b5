#pragma once

// Mutation-only genetic algorithm over [A, E, gamma, phi].
//
// Each generation: evaluate the population in parallel, keep the top quarter
// as parents (unmutated), clone every parent into `children_per_parent`
// children and mutate each child with probability r_m. A mutated child gets
// Gaussian noise on every gene and is resampled until it lies in range.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <thread>
#include <vector>

#include "mcan/can_core.hpp"
#include "mcan/error.hpp"
#include "mcan/head_direction.hpp"
#include "mcan/metrics.hpp"
#include "mcan/multiscale.hpp"

namespace mcan {

enum Gene : std::size_t { gene_A = 0, gene_E = 1, gene_gamma = 2, gene_phi = 3 };

struct GeneRange {
  double lo;
  double hi;
  bool log_scale = false;
};

using GeneRanges = std::array<GeneRange, 4>;

inline GeneRanges default_gene_ranges() {
  return {{{1.0, 10.0, false},
           {1.0, 10.0, false},
           {0.0, 1.0, false},
           {NetworkParams::min_inhibition, NetworkParams::max_inhibition, true}}};
}

struct Genome {
  std::array<double, 4> genes{4.0, 4.0, 1.0, 0.002};

  bool within(const GeneRanges& ranges) const {
    for (std::size_t i = 0; i < genes.size(); ++i) {
      if (!(genes[i] >= ranges[i].lo && genes[i] <= ranges[i].hi)) return false;
    }
    return true;
  }

  /// A and E are rounded to whole neurons on use.
  NetworkParams to_params() const {
    NetworkParams p;
    p.activation_radius = static_cast<int>(std::lround(genes[gene_A]));
    p.excitation_radius = static_cast<int>(std::lround(genes[gene_E]));
    p.motion_confidence = genes[gene_gamma];
    p.inhibition_factor = genes[gene_phi];
    return p;
  }

  static Genome from_params(const NetworkParams& p) {
    return {{static_cast<double>(p.activation_radius), static_cast<double>(p.excitation_radius),
             p.motion_confidence, p.inhibition_factor}};
  }

  friend bool operator==(const Genome&, const Genome&) = default;
};

using Rng = std::mt19937_64;

/// Deterministic stream id mixing (splitmix64 finalizer).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline Genome random_genome(const GeneRanges& ranges, Rng& rng) {
  Genome g;
  for (std::size_t i = 0; i < g.genes.size(); ++i) {
    const auto& r = ranges[i];
    if (r.log_scale) {
      std::uniform_real_distribution<double> u(std::log10(r.lo), std::log10(r.hi));
      g.genes[i] = std::clamp(std::pow(10.0, u(rng)), r.lo, r.hi);
    } else {
      std::uniform_real_distribution<double> u(r.lo, r.hi);
      g.genes[i] = u(rng);
    }
  }
  return g;
}

struct MutationStats {
  std::size_t clamped = 0;
};

/// With probability `rate`, perturbs every gene by N(0, sigma_fraction *
/// range width) (log10 width for log-scale genes), resampling the whole
/// genome until it is in range. After 1000 rejected draws the last draw is
/// clamped.
inline Genome mutate(const Genome& g, double rate, double sigma_fraction,
                     const GeneRanges& ranges, Rng& rng, MutationStats* stats = nullptr) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (!(coin(rng) < rate)) return g;
  std::normal_distribution<double> noise(0.0, 1.0);
  constexpr int max_attempts = 1000;
  Genome candidate = g;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    for (std::size_t i = 0; i < g.genes.size(); ++i) {
      const auto& r = ranges[i];
      if (r.log_scale) {
        const double width = std::log10(r.hi) - std::log10(r.lo);
        candidate.genes[i] =
            std::pow(10.0, std::log10(g.genes[i]) + noise(rng) * sigma_fraction * width);
      } else {
        candidate.genes[i] = g.genes[i] + noise(rng) * sigma_fraction * (r.hi - r.lo);
      }
    }
    if (candidate.within(ranges)) return candidate;
  }
  for (std::size_t i = 0; i < g.genes.size(); ++i) {
    candidate.genes[i] = std::clamp(candidate.genes[i], ranges[i].lo, ranges[i].hi);
  }
  if (stats) ++stats->clamped;
  return candidate;
}

/// Indices of the top ceil(fraction * n) genomes. Ties keep the lower index;
/// non-finite fitness ranks below every finite value.
inline std::vector<std::size_t> select_parents(std::span<const double> fitnesses,
                                               double fraction = 0.25) {
  if (fitnesses.empty()) fail(ErrorKind::input, "cannot select parents from an empty population");
  const auto count = static_cast<std::size_t>(std::ceil(fraction * fitnesses.size() - 1e-9));
  std::vector<std::size_t> order(fitnesses.size());
  std::iota(order.begin(), order.end(), 0);
  auto key = [&](std::size_t i) {
    return std::isfinite(fitnesses[i]) ? fitnesses[i] : -std::numeric_limits<double>::infinity();
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return key(a) > key(b); });
  order.resize(std::max<std::size_t>(1, count));
  return order;
}

/// Path-integration trial used as fitness.
struct TrialSpec {
  enum class Topology { ring, stack };
  Topology topology = Topology::stack;
  int steps = 1000;
  double dt = 1.0;
  double max_speed = 20.0;       // stack: speeds uniform in [0, max_speed]
  double max_turn_deg = 30.0;    // ring: per-step turn uniform in +-max_turn_deg
  StackConfig stack{};
  int ring_neurons = HeadDirectionNetwork::default_neurons;
  std::uint64_t seed = 0;
};

struct FitnessResult {
  double fitness = 0.0;
  bool fault = false;
};

/// Negative SAD between decoded and analytically integrated trajectories.
/// Ring trials compare headings in degrees, stack trials positions in meters.
/// A collapse anywhere in the trial scores -infinity.
inline FitnessResult fitness_path_integration(const Genome& genome, const TrialSpec& trial) {
  constexpr double worst = -std::numeric_limits<double>::infinity();
  NetworkParams params = genome.to_params();
  try {
    params.validate();
  } catch (const Error&) {
    return {worst, true};
  }
  Rng rng(mix_seed(trial.seed, 0x7121a1));
  try {
    if (trial.topology == TrialSpec::Topology::ring) {
      std::uniform_real_distribution<double> turn(-trial.max_turn_deg, trial.max_turn_deg);
      HeadDirectionNetwork hd(0.0, params, trial.ring_neurons);
      double truth = 0.0;
      double total = 0.0;
      for (int i = 0; i < trial.steps; ++i) {
        const double deg = turn(rng);
        truth = wrap_degrees(truth + deg);
        const double est = hd.step(deg * std::numbers::pi / 180.0 / trial.dt, trial.dt);
        total += std::abs(angle_diff_degrees(est, truth));
      }
      if (hd.fault_count() > 0) return {worst, true};
      return {-total, false};
    }
    std::uniform_real_distribution<double> speed(0.0, trial.max_speed);
    std::uniform_real_distribution<double> heading(0.0, 360.0);
    ScaleStack stack(trial.stack, params);
    Point2 truth{0.0, 0.0};
    double total = 0.0;
    for (int i = 0; i < trial.steps; ++i) {
      const double v = speed(rng);
      const double h = heading(rng);
      const double rad = h * std::numbers::pi / 180.0;
      truth[0] += v * trial.dt * std::cos(rad);
      truth[1] += v * trial.dt * std::sin(rad);
      stack.step(v, h, trial.dt);
      const auto est = stack.decode();
      total += std::abs(est[0] - truth[0]) + std::abs(est[1] - truth[1]);
    }
    if (stack.fault_count() > 0) return {worst, true};
    return {-total, false};
  } catch (const Error&) {
    return {worst, true};
  }
}

struct GaConfig {
  int population_size = 24;
  int max_generations = 20;
  double mutation_rate = 0.8;
  double mutation_sigma = 0.1;  // fraction of each gene's range width
  double parent_fraction = 0.25;
  int children_per_parent = 3;
  int parallel_workers = 14;
  std::uint64_t rng_seed = 0;
  GeneRanges ranges = default_gene_ranges();
  TrialSpec fitness_trial{};

  std::size_t parent_count() const {
    return static_cast<std::size_t>(std::ceil(parent_fraction * population_size - 1e-9));
  }

  void validate() const {
    if (population_size <= 0) fail(ErrorKind::config, "population size must be positive");
    if (max_generations <= 0) fail(ErrorKind::config, "max generations must be positive");
    if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0)) {
      fail(ErrorKind::config, "mutation rate must be a probability");
    }
    if (!(mutation_sigma >= 0.0)) fail(ErrorKind::config, "mutation sigma must be nonnegative");
    if (children_per_parent < 0) fail(ErrorKind::config, "children per parent must be >= 0");
    if (parallel_workers <= 0) fail(ErrorKind::config, "need at least one worker");
    if (parent_count() * (1 + children_per_parent) != static_cast<std::size_t>(population_size)) {
      fail(ErrorKind::config,
           "parents * (1 + children per parent) must equal the population size");
    }
  }
};

struct GenerationRecord {
  int generation = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
  Genome best_genome;
  std::size_t parents = 0;
  std::size_t children = 0;
};

struct GaResult {
  Genome best;
  double best_fitness = -std::numeric_limits<double>::infinity();
  std::vector<GenerationRecord> history;
  std::size_t mutation_clamps = 0;
  std::size_t evaluations = 0;
};

/// Evaluates fitness(genome) for every genome on `workers` threads; results
/// are stored by position.
template <class Fitness>
std::vector<double> evaluate_parallel(const std::vector<Genome>& genomes, Fitness& fitness,
                                      int workers) {
  std::vector<double> out(genomes.size(), 0.0);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < genomes.size(); i = next++) {
      const double f = fitness(genomes[i]);
      out[i] = std::isfinite(f) ? f : -std::numeric_limits<double>::infinity();
    }
  };
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)),
                                       genomes.size());
  if (n <= 1) {
    work();
    return out;
  }
  std::vector<std::jthread> pool;
  pool.reserve(n);
  for (std::size_t t = 0; t < n; ++t) pool.emplace_back(work);
  return out;
}

/// Runs the GA. `fitness` must be a pure, thread-safe function of the genome.
template <class Fitness>
GaResult run_ga(const GaConfig& config, Fitness&& fitness) {
  config.validate();
  Rng rng(mix_seed(config.rng_seed, 0x6a));
  std::vector<Genome> population;
  population.reserve(config.population_size);
  for (int i = 0; i < config.population_size; ++i) {
    population.push_back(random_genome(config.ranges, rng));
  }
  // Parents keep their fitness from the previous generation.
  std::vector<std::optional<double>> cached(population.size());

  GaResult result;
  MutationStats stats;
  for (int gen = 0; gen < config.max_generations; ++gen) {
    std::vector<Genome> pending;
    std::vector<std::size_t> pending_slot;
    for (std::size_t i = 0; i < population.size(); ++i) {
      if (!cached[i]) {
        pending.push_back(population[i]);
        pending_slot.push_back(i);
      }
    }
    const auto fresh = evaluate_parallel(pending, fitness, config.parallel_workers);
    result.evaluations += fresh.size();
    std::vector<double> fitnesses(population.size());
    for (std::size_t k = 0; k < pending_slot.size(); ++k) cached[pending_slot[k]] = fresh[k];
    for (std::size_t i = 0; i < population.size(); ++i) fitnesses[i] = *cached[i];

    const auto parents = select_parents(fitnesses, config.parent_fraction);

    GenerationRecord rec;
    rec.generation = gen;
    rec.best_fitness = fitnesses[parents.front()];
    rec.best_genome = population[parents.front()];
    double sum = 0.0;
    std::size_t finite = 0;
    for (double f : fitnesses) {
      if (std::isfinite(f)) {
        sum += f;
        ++finite;
      }
    }
    rec.mean_fitness = finite ? sum / finite : -std::numeric_limits<double>::infinity();
    if (rec.best_fitness > result.best_fitness || result.history.empty()) {
      result.best_fitness = rec.best_fitness;
      result.best = rec.best_genome;
    }

    std::vector<Genome> next;
    std::vector<std::optional<double>> next_cached;
    next.reserve(population.size());
    for (std::size_t p : parents) {
      next.push_back(population[p]);
      next_cached.push_back(fitnesses[p]);
    }
    for (std::size_t p : parents) {
      for (int c = 0; c < config.children_per_parent; ++c) {
        next.push_back(mutate(population[p], config.mutation_rate, config.mutation_sigma,
                              config.ranges, rng, &stats));
        next_cached.emplace_back();
      }
    }
    rec.parents = parents.size();
    rec.children = next.size() - parents.size();
    result.history.push_back(rec);
    population = std::move(next);
    cached = std::move(next_cached);
  }
  result.mutation_clamps = stats.clamped;
  return result;
}

}  // namespace mcan
