#pragma once

#include <cstdint>
#include <vector>

#include "finsim/dirichlet.hpp"
#include "finsim/random.hpp"

namespace finsim {

/// Sample path of the quenched chain: exponential holds, conductance-weighted jumps.
struct Trajectory {
  int start = 0;
  std::vector<std::pair<int, double>> visited;  // (vertex, holding duration)
  double total_time = 0.0;
};

/// Per-vertex occupation time divided by nu (discrete local time).
struct OccupationProfile {
  std::vector<double> local_time;
  double total_time = 0.0;
};

struct SmallBallCdf {
  std::vector<double> lambdas;
  std::vector<double> cdf;
  double hit_plus_fraction = 0.0;
};

inline constexpr std::uint64_t kDefaultEventCap = 100'000'000;

/// Event-driven simulation from x0 until total time exceeds `horizon`
/// (the last holding is truncated at the horizon).
Trajectory simulate_path(const Generator& gen, int x0, double horizon, RngStream& rng,
                         std::uint64_t event_cap = kDefaultEventCap);

/// n i.i.d. samples of the exit time of `domain` started at x0.
std::vector<double> exit_time_samples(const Generator& gen, int x0, const std::vector<int>& domain,
                                      int n, RngStream& rng, std::uint64_t event_cap = kDefaultEventCap);

/// n i.i.d. samples of the hitting time of `target` started at x0 != target.
std::vector<double> hitting_time_samples(const Generator& gen, int x0, int target, int n,
                                         RngStream& rng, std::uint64_t event_cap = kDefaultEventCap);

OccupationProfile occupation_profile(const Trajectory& traj, const TrapEnvironment& env);

/// Ray-Knight small-ball experiment: unit-trap walk on [-1,1] with lattice step
/// 2/lattice_n started at 0, run to the first hit of -1 or +1; records the
/// sup over vertices of the occupation profile and returns the empirical CDF
/// on `lambda_grid`.
SmallBallCdf interval_local_time_smallball(int lattice_n, int n_samples,
                                           const std::vector<double>& lambda_grid, RngStream& rng);

}  // namespace finsim
