#include "finsim/walker.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace finsim {

namespace {

int jump_from(const SpaceModel& space, int x, RngStream& rng) {
  const auto& nbrs = space.neighbours(x);
  double u = std::uniform_real_distribution<double>(0.0, space.degree(x))(rng);
  double acc = 0.0;
  for (const auto& [y, c] : nbrs) {
    acc += c;
    if (u < acc) return y;
  }
  return nbrs.back().first;  // rounding fallthrough
}

[[noreturn]] void cap_exceeded(std::uint64_t cap) {
  throw std::runtime_error("walker: event cap " + std::to_string(cap) +
                           " exceeded; the chain is stuck in deep traps for this horizon");
}

}  // namespace

Trajectory simulate_path(const Generator& gen, int x0, double horizon, RngStream& rng,
                         std::uint64_t event_cap) {
  const SpaceModel& space = gen.space();
  if (x0 < 0 || x0 >= space.vertex_count()) throw std::invalid_argument("simulate_path: bad start vertex");
  Trajectory traj;
  traj.start = x0;
  int x = x0;
  std::uint64_t events = 0;
  while (traj.total_time < horizon) {
    if (++events > event_cap) cap_exceeded(event_cap);
    double hold = std::exponential_distribution<double>(gen.rate(x))(rng);
    if (traj.total_time + hold >= horizon) {
      hold = horizon - traj.total_time;
      traj.visited.emplace_back(x, hold);
      traj.total_time = horizon;
      break;
    }
    traj.visited.emplace_back(x, hold);
    traj.total_time += hold;
    x = jump_from(space, x, rng);
  }
  return traj;
}

std::vector<double> exit_time_samples(const Generator& gen, int x0, const std::vector<int>& domain,
                                      int n, RngStream& rng, std::uint64_t event_cap) {
  const SpaceModel& space = gen.space();
  std::vector<char> inside(space.vertex_count(), 0);
  for (int v : domain) inside.at(v) = 1;
  if (!inside[x0]) throw std::invalid_argument("exit_time_samples: start outside domain");
  std::vector<double> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    int x = x0;
    double t = 0.0;
    std::uint64_t events = 0;
    while (inside[x]) {
      if (++events > event_cap) cap_exceeded(event_cap);
      t += std::exponential_distribution<double>(gen.rate(x))(rng);
      x = jump_from(space, x, rng);
    }
    out.push_back(t);
  }
  return out;
}

std::vector<double> hitting_time_samples(const Generator& gen, int x0, int target, int n,
                                         RngStream& rng, std::uint64_t event_cap) {
  if (x0 == target) throw std::invalid_argument("hitting_time_samples: start equals target");
  const SpaceModel& space = gen.space();
  std::vector<double> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    int x = x0;
    double t = 0.0;
    std::uint64_t events = 0;
    while (x != target) {
      if (++events > event_cap) cap_exceeded(event_cap);
      t += std::exponential_distribution<double>(gen.rate(x))(rng);
      x = jump_from(space, x, rng);
    }
    out.push_back(t);
  }
  return out;
}

OccupationProfile occupation_profile(const Trajectory& traj, const TrapEnvironment& env) {
  OccupationProfile prof;
  prof.local_time.assign(env.space().vertex_count(), 0.0);
  for (const auto& [x, hold] : traj.visited) prof.local_time[x] += hold;
  prof.total_time = traj.total_time;
  for (int x = 0; x < static_cast<int>(prof.local_time.size()); ++x)
    prof.local_time[x] /= env.nu_mass(x);
  return prof;
}

SmallBallCdf interval_local_time_smallball(int lattice_n, int n_samples,
                                           const std::vector<double>& lambda_grid, RngStream& rng) {
  if (lattice_n < 2 || lattice_n % 2 != 0) throw std::invalid_argument("lattice_n must be even, >= 2");
  // Unit-trap chain on [-1,1]: n cells of mass 2/n, conductance n/2 per edge,
  // so every interior vertex jumps at rate n^2/2 and steps +-1 fairly. The
  // holds are i.i.d. and independent of the jump chain, so run the jump chain
  // with coin flips only and draw each vertex's occupation as a Gamma(visits)
  // at the end.
  const int n = lattice_n;
  const double interior_rate = double(n) * double(n) / 2.0;
  const double cell_mass = 2.0 / n;
  std::vector<std::uint32_t> visits(n + 1, 0);
  std::vector<double> sups;
  sups.reserve(n_samples);
  int hit_plus = 0;
  std::uniform_int_distribution<std::uint64_t> bits;
  for (int s = 0; s < n_samples; ++s) {
    std::fill(visits.begin(), visits.end(), 0u);
    int x = n / 2;
    std::uint64_t events = 0;
    std::uint64_t pool = 0;
    int pool_left = 0;
    while (x != 0 && x != n) {
      if (++events > kDefaultEventCap) cap_exceeded(kDefaultEventCap);
      ++visits[x];
      if (pool_left == 0) {
        pool = bits(rng);
        pool_left = 64;
      }
      x += (pool & 1u) ? 1 : -1;
      pool >>= 1;
      --pool_left;
    }
    if (x == n) ++hit_plus;
    double sup = 0.0;
    for (int v = 1; v < n; ++v) {
      if (visits[v] == 0) continue;
      double occ = std::gamma_distribution<double>(double(visits[v]), 1.0 / interior_rate)(rng);
      sup = std::max(sup, occ / cell_mass);
    }
    sups.push_back(sup);
  }
  std::sort(sups.begin(), sups.end());
  SmallBallCdf out;
  out.lambdas = lambda_grid;
  out.cdf.reserve(lambda_grid.size());
  for (double lam : lambda_grid) {
    auto it = std::upper_bound(sups.begin(), sups.end(), lam);
    out.cdf.push_back(double(it - sups.begin()) / double(n_samples));
  }
  out.hit_plus_fraction = double(hit_plus) / double(n_samples);
  return out;
}

}  // namespace finsim
