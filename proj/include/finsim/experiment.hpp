#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "finsim/scaling.hpp"

namespace finsim {

struct SpaceSpec {
  std::string kind = "path";  // path | gasket
  int n_cells = 1024;
  double length = 1.0;
  int level = 4;

  std::shared_ptr<const SpaceModel> build() const;
  std::string cache_key() const;
};

/// Flat experiment configuration; parsed strictly (unknown keys are fatal).
struct ExperimentConfig {
  std::string experiment;  // exponents | volume | subordinator | heatkernel | exit | report
  SpaceSpec space;
  double alpha = 0.5;
  int ensemble = 1;
  std::uint64_t seed = 0;
  bool seed_set = false;

  double t_min = 1e-4, t_max = 1.0;
  int t_points = 25;
  double r_min = 0.0, r_max = 0.0;
  int r_points = 20;
  double fit_lo = 0.0, fit_hi = 0.0;  // power-law fit window in t (0,0 = full grid)
  std::vector<double> distances;      // off-diagonal probes / exit radii D
  int samples = 100000;
  int lattice_n = 200;
  double epsilon = 0.5;
  int workers = 1;
  std::string out_dir = "out";
  std::string input_dir;  // report: directory of a previous run

  std::vector<double> time_grid() const;   // log-spaced [t_min, t_max]
  std::vector<double> radius_grid() const; // log-spaced [r_min, r_max]
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig parse_config_file(const std::string& path);

/// Runs the configured experiment; writes CSV results plus manifest.json
/// (config echo, per-task seeds, wall times, file content hashes) under
/// config.out_dir. Returns the manifest path. Deterministic given
/// (config, seed) apart from recorded wall times.
std::string run_experiment(const ExperimentConfig& config);

/// SVG plots from a completed run directory; returns the file names written.
std::vector<std::string> emit_plots(const std::string& run_dir, const std::string& out_dir);

std::uint64_t fnv1a_hash(const std::string& bytes);

/// Environment ensemble with per-index derived seeds; transparently cached on
/// disk under cache_dir when non-empty (key: space, alpha, seed).
std::vector<TrapEnvironment> load_or_sample_ensemble(const SpaceSpec& spec, double alpha,
                                                     std::uint64_t master_seed, int count,
                                                     const std::string& cache_dir);

}  // namespace finsim
