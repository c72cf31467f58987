#include "finsim/trap_environment.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "finsim/stable_law.hpp"

namespace finsim {

TrapEnvironment TrapEnvironment::sample_increments(std::shared_ptr<const SpaceModel> space, double alpha,
                                                   std::uint64_t seed) {
  StableLaw law(alpha);
  TrapEnvironment env;
  env.space_ = std::move(space);
  env.alpha_ = alpha;
  env.seed_ = seed;
  env.representation_ = NuRepresentation::increments;
  const int n = env.space_->vertex_count();
  env.nu_mass_.resize(n);
  RngStream rng = make_stream(seed);
  for (int x = 0; x < n; ++x) {
    env.nu_mass_[x] = law.sample_increment(env.space_->cell_mass()[x], rng);
    env.nu_total_ += env.nu_mass_[x];
  }
  return env;
}

TrapEnvironment TrapEnvironment::sample_ppp(std::shared_ptr<const SpaceModel> space, double alpha,
                                            double v_min, std::uint64_t seed) {
  if (!(v_min > 0.0)) throw std::invalid_argument("sample_ppp: v_min must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("sample_ppp: alpha must be in (0,1)");
  TrapEnvironment env;
  env.space_ = std::move(space);
  env.alpha_ = alpha;
  env.seed_ = seed;
  env.representation_ = NuRepresentation::ppp;
  env.v_min_ = v_min;
  const int n = env.space_->vertex_count();
  env.nu_mass_.resize(n);
  RngStream rng = make_stream(seed);
  // Levy tail above v_min: integral of alpha v^{-1-alpha} dv = v_min^{-alpha};
  // truncated mean below v_min: alpha v_min^{1-alpha} / (1-alpha).
  const double tail_rate = std::pow(v_min, -alpha);
  const double compensation = alpha * std::pow(v_min, 1.0 - alpha) / (1.0 - alpha);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int x = 0; x < n; ++x) {
    const double mu = env.space_->cell_mass()[x];
    std::poisson_distribution<int> pois(mu * tail_rate);
    const int k = pois(rng);
    double mass = mu * compensation;
    for (int i = 0; i < k; ++i) {
      double u = unif(rng);
      while (u <= 0.0) u = unif(rng);
      const double depth = v_min * std::pow(u, -1.0 / alpha);  // Pareto(alpha, v_min)
      env.atoms_.push_back({depth, x});
      mass += depth;
    }
    env.nu_mass_[x] = mass;
    env.nu_total_ += mass;
  }
  return env;
}

TrapEnvironment TrapEnvironment::unit_traps(std::shared_ptr<const SpaceModel> space) {
  TrapEnvironment env;
  env.space_ = std::move(space);
  env.alpha_ = 1.0;
  env.representation_ = NuRepresentation::increments;
  env.nu_mass_ = env.space_->cell_mass();
  env.nu_total_ = env.space_->total_mass();
  return env;
}

TrapEnvironment TrapEnvironment::restore(std::shared_ptr<const SpaceModel> space, double alpha,
                                         std::uint64_t seed, std::vector<double> nu_mass,
                                         NuRepresentation rep) {
  TrapEnvironment env;
  env.space_ = std::move(space);
  if (static_cast<int>(nu_mass.size()) != env.space_->vertex_count())
    throw std::invalid_argument("restore: mass vector size mismatch");
  for (double m : nu_mass)
    if (!(m > 0.0)) throw std::invalid_argument("restore: nu masses must be positive");
  env.alpha_ = alpha;
  env.seed_ = seed;
  env.representation_ = rep;
  env.nu_mass_ = std::move(nu_mass);
  for (double m : env.nu_mass_) env.nu_total_ += m;
  return env;
}

double TrapEnvironment::nu_ball_volume(int x, double r) const {
  double sum = 0.0;
  for (int y : space_->resistance_ball(x, r)) sum += nu_mass_[y];
  return sum;
}

VolumeCurve TrapEnvironment::volume_curve(int x, const std::vector<double>& radii) const {
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (!(radii[i] > radii[i - 1])) throw std::invalid_argument("volume_curve: radii must be increasing");
  VolumeCurve curve;
  curve.center = x;
  curve.radii = radii;
  curve.values.resize(radii.size(), 0.0);
  // one resistance sweep: sort vertices by R(x, .) and accumulate
  auto prof = space_->resistance_profile(x);
  std::vector<int> order(prof.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return prof[a] < prof[b]; });
  double acc = 0.0;
  std::size_t j = 0;
  for (std::size_t ri = 0; ri < radii.size(); ++ri) {
    while (j < order.size() && prof[order[j]] < radii[ri]) acc += nu_mass_[order[j++]];
    curve.values[ri] = acc;
  }
  return curve;
}

void TrapEnvironment::write_csv(std::ostream& os) const {
  os << "# {\"alpha\":" << alpha_ << ",\"seed\":" << seed_ << ",\"representation\":\""
     << (representation_ == NuRepresentation::increments ? "increments" : "ppp")
     << "\",\"v_min\":" << v_min_ << ",\"space\":" << space_->to_json_spec() << "}\n";
  os << "vertex,nu_mass\n";
  os.precision(17);
  for (std::size_t x = 0; x < nu_mass_.size(); ++x) os << x << "," << nu_mass_[x] << "\n";
}

}  // namespace finsim
