#pragma once

// JSON files for genomes, GA configuration and the occupancy grid sidecar.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "mcan/city_sim.hpp"
#include "mcan/error.hpp"
#include "mcan/ga_tuner.hpp"

namespace mcan {

using Json = nlohmann::json;

inline Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    fail(ErrorKind::parse, path.string() + ": " + e.what());
  }
}

inline void write_json(const std::filesystem::path& path, const Json& j) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorKind::io, "write failed for " + path.string());
}

inline Json genome_to_json(const Genome& g) {
  return {{"activation_radius", g.genes[gene_A]},
          {"excitation_radius", g.genes[gene_E]},
          {"motion_confidence", g.genes[gene_gamma]},
          {"inhibition_factor", g.genes[gene_phi]}};
}

inline Genome genome_from_json(const Json& j, const GeneRanges& ranges = default_gene_ranges()) {
  Genome g;
  try {
    g.genes[gene_A] = j.at("activation_radius").get<double>();
    g.genes[gene_E] = j.at("excitation_radius").get<double>();
    g.genes[gene_gamma] = j.at("motion_confidence").get<double>();
    g.genes[gene_phi] = j.at("inhibition_factor").get<double>();
  } catch (const Json::exception& e) {
    fail(ErrorKind::parse, std::string("genome: ") + e.what());
  }
  if (!g.within(ranges)) fail(ErrorKind::config, "genome values outside their ranges");
  return g;
}

inline Genome load_genome(const std::filesystem::path& path) {
  return genome_from_json(read_json(path));
}

inline void save_genome(const std::filesystem::path& path, const Genome& g) {
  write_json(path, genome_to_json(g));
}

/// Reads a GA configuration; absent keys keep their defaults.
inline GaConfig ga_config_from_json(const Json& j) {
  GaConfig c;
  try {
    c.population_size = j.value("population_size", c.population_size);
    c.max_generations = j.value("max_generations", c.max_generations);
    c.mutation_rate = j.value("mutation_rate", c.mutation_rate);
    c.mutation_sigma = j.value("mutation_sigma", c.mutation_sigma);
    c.parent_fraction = j.value("parent_fraction", c.parent_fraction);
    c.children_per_parent = j.value("children_per_parent", c.children_per_parent);
    c.parallel_workers = j.value("parallel_workers", c.parallel_workers);
    c.rng_seed = j.value("rng_seed", c.rng_seed);
    if (j.contains("fitness_trial")) {
      const auto& t = j.at("fitness_trial");
      auto& trial = c.fitness_trial;
      trial.steps = t.value("steps", trial.steps);
      trial.dt = t.value("dt", trial.dt);
      trial.max_speed = t.value("max_speed", trial.max_speed);
      trial.max_turn_deg = t.value("max_turn_deg", trial.max_turn_deg);
      trial.ring_neurons = t.value("ring_neurons", trial.ring_neurons);
      trial.stack.neurons = t.value("neurons", trial.stack.neurons);
      if (t.contains("scales")) trial.stack.scales = t.at("scales").get<std::vector<double>>();
    }
  } catch (const Json::exception& e) {
    fail(ErrorKind::parse, std::string("GA config: ") + e.what());
  }
  c.validate();
  return c;
}

inline Json ga_config_to_json(const GaConfig& c) {
  const auto& t = c.fitness_trial;
  return {{"population_size", c.population_size},
          {"max_generations", c.max_generations},
          {"mutation_rate", c.mutation_rate},
          {"mutation_sigma", c.mutation_sigma},
          {"parent_fraction", c.parent_fraction},
          {"children_per_parent", c.children_per_parent},
          {"parallel_workers", c.parallel_workers},
          {"rng_seed", c.rng_seed},
          {"fitness_trial",
           {{"steps", t.steps},
            {"dt", t.dt},
            {"max_speed", t.max_speed},
            {"max_turn_deg", t.max_turn_deg},
            {"ring_neurons", t.ring_neurons},
            {"neurons", t.stack.neurons},
            {"scales", t.stack.scales}}}};
}

/// Writes `<stem>.pgm` (speed scaled to gray, 0 = blocked, row 0 at the top
/// = northmost) and `<stem>.json` with resolution, origin and speed table.
inline void save_occupancy(const std::filesystem::path& stem, const OccupancyGrid& grid) {
  auto pgm = stem;
  pgm += ".pgm";
  auto sidecar = stem;
  sidecar += ".json";
  if (stem.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(stem.parent_path(), ec);
  }
  std::ofstream out(pgm, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write " + pgm.string());
  double top = 0.0;
  for (double s : grid.speed) top = std::max(top, s);
  out << "P5\n" << grid.width << ' ' << grid.height << "\n255\n";
  for (int y = grid.height - 1; y >= 0; --y) {
    for (int x = 0; x < grid.width; ++x) {
      const double s = grid.speed_at({x, y});
      const int level = s > 0.0 ? std::max(1, static_cast<int>(std::lround(255.0 * s / top))) : 0;
      out.put(static_cast<char>(level));
    }
  }
  if (!out) fail(ErrorKind::io, "write failed for " + pgm.string());
  Json table = Json::object();
  for (const auto& [cls, speed] : road_class_speeds()) table[cls] = speed;
  write_json(sidecar, {{"resolution_m", grid.resolution},
                       {"width", grid.width},
                       {"height", grid.height},
                       {"origin_m", {grid.origin[0], grid.origin[1]}},
                       {"max_speed_mps", top},
                       {"gray_to_speed", "speed = gray / 255 * max_speed_mps"},
                       {"class_speeds_mps", table}});
}

}  // namespace mcan
