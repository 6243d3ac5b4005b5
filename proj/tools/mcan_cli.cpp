// mcan: tune, simulate, track, evaluate and plot.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mcan/mcan.hpp"

namespace fs = std::filesystem;
using namespace mcan;

namespace {

enum Exit : int { exit_ok = 0, exit_usage = 1, exit_data = 2, exit_numerical = 3 };

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::undecodable:
    case ErrorKind::numerical_fault:
      return exit_numerical;
    default:
      return exit_data;
  }
}

struct TuneOptions {
  std::string topology = "2d";
  std::uint64_t seed = 0;
  std::string config;
  std::string out;
  std::string history;
  int steps = 0;
  int generations = 0;
  int workers = 0;
};

int cmd_tune(const TuneOptions& o) {
  GaConfig config;
  if (!o.config.empty()) config = ga_config_from_json(read_json(o.config));
  config.rng_seed = o.seed;
  if (o.generations > 0) config.max_generations = o.generations;
  if (o.workers > 0) config.parallel_workers = o.workers;
  auto& trial = config.fitness_trial;
  trial.topology = o.topology == "1d" ? TrialSpec::Topology::ring : TrialSpec::Topology::stack;
  if (o.steps > 0) trial.steps = o.steps;
  trial.seed = mix_seed(o.seed, 0x7121);
  config.validate();

  const auto result = run_ga(config, [&](const Genome& g) {
    return fitness_path_integration(g, trial).fitness;
  });

  const fs::path out = o.out.empty() ? fs::path("params") / (o.topology + "_genome.json")
                                     : fs::path(o.out);
  save_genome(out, result.best);
  fs::path history = o.history;
  if (history.empty()) {
    history = out;
    history.replace_extension(".history.csv");
  }
  std::ofstream h(history);
  if (!h) fail(ErrorKind::io, "cannot write " + history.string());
  h << "generation,best_fitness,mean_fitness,activation_radius,excitation_radius,"
       "motion_confidence,inhibition_factor\n";
  for (const auto& r : result.history) {
    h << r.generation << ',' << format_double(r.best_fitness) << ','
      << format_double(r.mean_fitness);
    for (double g : r.best_genome.genes) h << ',' << format_double(g);
    h << '\n';
    std::printf("generation %2d  best %.6g  mean %.6g\n", r.generation, r.best_fitness,
                r.mean_fitness);
  }
  std::printf("best genome: A=%.4g E=%.4g gamma=%.4g phi=%.4g  fitness %.6g\n",
              result.best.genes[gene_A], result.best.genes[gene_E], result.best.genes[gene_gamma],
              result.best.genes[gene_phi], result.best_fitness);
  std::printf("wrote %s and %s\n", out.string().c_str(), history.string().c_str());
  return exit_ok;
}

struct SimulateOptions {
  std::string osm;
  int tracks = 1;
  std::uint64_t seed = 0;
  double resolution = 10.0;
  double region = 10000.0;
  double dt = 1.0;
  double min_separation = 1000.0;
  std::string out = "sim";
};

int cmd_simulate(const SimulateOptions& o) {
  std::ifstream in(o.osm);
  if (!in) fail(ErrorKind::io, "cannot open " + o.osm);
  OsmOptions osm_options;
  osm_options.region_size_m = o.region;
  const auto net = parse_osm(in, osm_options);
  const auto grid = rasterize(net, o.resolution);
  fs::create_directories(o.out);
  save_occupancy(fs::path(o.out) / "occupancy", grid);

  BicycleConfig model;
  model.dt = o.dt;
  double total_m = 0.0;
  int ok = 0;
  std::ostringstream summary;
  summary << "track,status,samples,distance_m\n";
  for (int k = 0; k < o.tracks; ++k) {
    // Every track has its own stream, so track k does not depend on others.
    Rng rng(mix_seed(o.seed, 0x5100 + static_cast<std::uint64_t>(k)));
    char name[32];
    std::snprintf(name, sizeof name, "track_%03d", k);
    try {
      auto track = simulate_track(grid, rng, model, o.min_separation);
      track.data.source = name;
      save_dataset(fs::path(o.out) / (std::string(name) + ".csv"), track.data);
      const double d = path_length(track.data.ground_truth);
      total_m += d;
      ++ok;
      summary << name << ",ok," << track.data.size() << ',' << format_double(d) << '\n';
    } catch (const Error& e) {
      std::fprintf(stderr, "%s failed: %s\n", name, e.what());
      summary << name << ",failed:" << to_string(e.kind()) << ",0,0\n";
    }
  }
  summary << "total," << ok << '/' << o.tracks << ",," << format_double(total_m) << '\n';
  std::ofstream s(fs::path(o.out) / "summary.csv");
  s << summary.str();
  std::printf("%d/%d tracks, total distance %.2f km, grid %dx%d at %g m\n", ok, o.tracks,
              total_m / 1000.0, grid.width, grid.height, grid.resolution);
  return (o.tracks > 0 && ok == 0) ? exit_data : exit_ok;
}

struct TrackOptions {
  std::string input;
  std::string hd_genome = "params/1d_genome.json";
  std::string mcan_genome = "params/2d_genome.json";
  bool single_scale = false;
  std::string out;
};

int cmd_track(const TrackOptions& o) {
  const auto data = load_dataset(o.input);
  const auto hd = load_genome(o.hd_genome).to_params();
  const auto pos = load_genome(o.mcan_genome).to_params();
  const StackConfig stack = o.single_scale ? StackConfig::single_scale() : StackConfig{};
  PoseEstimate initial;
  if (!data.empty()) {
    const auto& g = data.ground_truth.front();
    initial = {g.t, g.x, g.y, wrap_degrees(g.theta * 180.0 / std::numbers::pi)};
  }
  const auto result = track_trajectory(data.samples, initial, stack, pos, hd);
  if (result.heading_faults + result.position_faults > 0) {
    std::fprintf(stderr, "warning: %zu heading and %zu position network collapses were reset\n",
                 result.heading_faults, result.position_faults);
  }
  fs::path out = o.out;
  if (out.empty()) {
    out = fs::path(o.input);
    out.replace_extension(o.single_scale ? ".single.csv" : ".multi.csv");
  }
  save_estimates(out, result.estimates);
  std::printf("%s: %zu estimates (%s) -> %s\n", o.input.c_str(), result.estimates.size(),
              o.single_scale ? "single-scale 200x200" : "multiscale 4x100x100",
              out.string().c_str());
  return exit_ok;
}

struct EvaluateOptions {
  std::vector<std::string> truth;
  std::vector<std::string> estimate;
  std::vector<std::string> baseline;
  double segment = 1000.0;
  std::string out;
};

struct Summary {
  double mean = 0.0;
  double std = 0.0;
};

Summary summarize(const std::vector<double>& v) {
  Summary s;
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double sq = 0.0;
  for (double x : v) sq += (x - s.mean) * (x - s.mean);
  s.std = v.size() > 1 ? std::sqrt(sq / static_cast<double>(v.size() - 1)) : 0.0;
  return s;
}

MetricReport evaluate_files(const std::string& estimate, const std::string& truth,
                            double segment) {
  const auto est = load_estimates(estimate);
  const auto gt = load_dataset(truth);
  return evaluate(positions(est), positions(gt.ground_truth), segment);
}

int cmd_evaluate(const EvaluateOptions& o) {
  if (o.truth.size() != o.estimate.size() ||
      (!o.baseline.empty() && o.baseline.size() != o.truth.size())) {
    fail(ErrorKind::input, "--truth, --estimate and --baseline need the same number of files");
  }
  if (!o.out.empty()) fs::create_directories(o.out);
  std::vector<double> multi;
  std::vector<double> single;
  const bool compare = !o.baseline.empty();
  if (compare) {
    std::printf("%-24s %14s %14s\n", "track", "Single-scale", "Multiscale");
  } else {
    std::printf("%-24s %12s %12s %12s %12s\n", "track", "ATE (m)", "ATE/m", "SAD",
                "distance (m)");
  }
  for (std::size_t i = 0; i < o.truth.size(); ++i) {
    const auto name = fs::path(o.truth[i]).stem().string();
    const auto r = evaluate_files(o.estimate[i], o.truth[i], o.segment);
    multi.push_back(r.ate_per_meter);
    if (!o.out.empty()) {
      std::ofstream f(fs::path(o.out) / (name + ".report.txt"));
      write_report(f, r, name);
    }
    if (compare) {
      const auto b = evaluate_files(o.baseline[i], o.truth[i], o.segment);
      single.push_back(b.ate_per_meter);
      if (!o.out.empty()) {
        std::ofstream f(fs::path(o.out) / (name + ".baseline.report.txt"));
        write_report(f, b, name + " (baseline)");
      }
      std::printf("%-24s %14.4f %14.4f\n", name.c_str(), b.ate_per_meter, r.ate_per_meter);
    } else {
      std::printf("%-24s %12.4f %12.6f %12.4f %12.2f\n", name.c_str(), r.ate_m, r.ate_per_meter,
                  r.sad, r.distance_m);
    }
  }
  const auto m = summarize(multi);
  if (compare) {
    const auto s = summarize(single);
    std::printf("%-24s %7.3f+-%-6.3f %7.3f+-%-6.3f\n", "mean+-std", s.mean, s.std, m.mean, m.std);
  } else if (o.truth.size() > 1) {
    std::printf("ATE/m mean %.6f std %.6f over %zu tracks\n", m.mean, m.std, multi.size());
  }
  return exit_ok;
}

struct PlotOptions {
  std::vector<std::string> inputs;
  std::vector<std::string> labels;
  std::string out = "trajectories.svg";
  std::string title;
};

/// Loads positions from a dataset CSV (ground truth) or an estimate CSV.
std::vector<Point2> load_positions(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path);
  std::string header;
  std::getline(in, header);
  in.clear();
  in.seekg(0);
  if (header.find("gt_x") != std::string::npos) return positions(read_dataset_csv(in).ground_truth);
  return positions(read_estimate_csv(in));
}

int cmd_plot(const PlotOptions& o) {
  std::vector<NamedTrajectory> tracks;
  for (std::size_t i = 0; i < o.inputs.size(); ++i) {
    const std::string name =
        i < o.labels.size() ? o.labels[i] : fs::path(o.inputs[i]).filename().string();
    tracks.push_back({name, load_positions(o.inputs[i])});
  }
  emit_plot(tracks, o.out, o.title);
  std::printf("wrote %s\n", o.out.c_str());
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiscale continuous attractor network dead reckoning"};
  app.require_subcommand(1);

  TuneOptions tune;
  auto* t = app.add_subcommand("tune", "Tune [A, E, gamma, phi] with the genetic algorithm");
  t->add_option("--topology", tune.topology, "1d (head direction ring) or 2d (scale stack)")
      ->required()
      ->check(CLI::IsMember({"1d", "2d"}));
  t->add_option("--seed", tune.seed, "Random seed")->capture_default_str();
  t->add_option("--config", tune.config, "GA configuration JSON")->check(CLI::ExistingFile);
  t->add_option("--out", tune.out, "Genome JSON (default params/<topology>_genome.json)");
  t->add_option("--history", tune.history, "History CSV (default next to the genome)");
  t->add_option("--steps", tune.steps, "Override the fitness trial length");
  t->add_option("--generations", tune.generations, "Override the generation count");
  t->add_option("--workers", tune.workers, "Override the worker count");

  SimulateOptions sim;
  auto* s = app.add_subcommand("simulate", "Generate trajectories on an OSM road network");
  s->add_option("--osm", sim.osm, "OSM XML extract")->required()->check(CLI::ExistingFile);
  s->add_option("--tracks", sim.tracks, "Number of tracks")->capture_default_str();
  s->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  s->add_option("--resolution", sim.resolution, "Grid resolution (m/cell)")
      ->capture_default_str();
  s->add_option("--region", sim.region, "Side of the square region (m)")->capture_default_str();
  s->add_option("--dt", sim.dt, "Sample interval (s)")->capture_default_str();
  s->add_option("--min-separation", sim.min_separation, "Minimum endpoint distance (m)")
      ->capture_default_str();
  s->add_option("--out", sim.out, "Output directory")->capture_default_str();

  TrackOptions track;
  auto* k = app.add_subcommand("track", "Estimate a trajectory from a dataset's velocities");
  k->add_option("--input", track.input, "Dataset CSV")->required()->check(CLI::ExistingFile);
  k->add_option("--hd-genome", track.hd_genome, "Head direction genome JSON")
      ->capture_default_str();
  k->add_option("--mcan-genome", track.mcan_genome, "Position network genome JSON")
      ->capture_default_str();
  k->add_flag("--single-scale", track.single_scale, "Use one 200x200 network instead of 4x100x100");
  k->add_option("--out", track.out, "Estimate CSV");

  EvaluateOptions ev;
  auto* e = app.add_subcommand("evaluate", "ATE, ATE/m and SAD of estimates against truth");
  e->add_option("--truth", ev.truth, "Dataset CSVs")->required()->check(CLI::ExistingFile);
  e->add_option("--estimate", ev.estimate, "Estimate CSVs, one per truth file")
      ->required()
      ->check(CLI::ExistingFile);
  e->add_option("--baseline", ev.baseline, "Baseline estimate CSVs for a comparison table")
      ->check(CLI::ExistingFile);
  e->add_option("--segment", ev.segment, "Segment length for realigned errors (m)")
      ->capture_default_str();
  e->add_option("--out", ev.out, "Directory for report files");

  PlotOptions plot;
  auto* p = app.add_subcommand("plot", "SVG overlay of trajectories");
  p->add_option("--input", plot.inputs, "Dataset or estimate CSVs")
      ->required()
      ->check(CLI::ExistingFile);
  p->add_option("--label", plot.labels, "Legend labels, in input order");
  p->add_option("--out", plot.out, "SVG path")->capture_default_str();
  p->add_option("--title", plot.title, "Plot title");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err) == 0 ? exit_ok : exit_usage;
  }

  try {
    if (*t) return cmd_tune(tune);
    if (*s) return cmd_simulate(sim);
    if (*k) return cmd_track(track);
    if (*e) return cmd_evaluate(ev);
    if (*p) return cmd_plot(plot);
  } catch (const Error& err) {
    std::fprintf(stderr, "error (%s): %s\n", to_string(err.kind()), err.what());
    return exit_code(err.kind());
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return exit_data;
  }
  return exit_usage;
}
