#include "finsim/dirichlet.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "finsim/symeig.hpp"

namespace finsim {

namespace {

// relative: symmetric eigensolvers are accurate to ~eps * |lambda|_max
constexpr double kEigClampRel = 1e-9;

// Is the edge set exactly the chain 0-1-...-(n-1)? True for path spaces.
bool is_chain(const SpaceModel& space) {
  const int n = space.vertex_count();
  if (static_cast<int>(space.edges().size()) != n - 1) return false;
  for (int i = 0; i < n; ++i) {
    const auto& nb = space.neighbours(i);
    for (auto [j, c] : nb)
      if (std::abs(i - j) != 1) return false;
    if (static_cast<std::size_t>(nb.size()) != (i == 0 || i == n - 1 ? 1u : 2u)) return false;
  }
  return true;
}

void clamp_eigenvalues(Eigen::VectorXd& lam) {
  const double tol = kEigClampRel * std::max(1.0, lam.cwiseAbs().maxCoeff());
  for (int k = 0; k < lam.size(); ++k) {
    if (lam[k] < -tol) throw std::runtime_error("generator: negative eigenvalue beyond tolerance");
    if (lam[k] < 0.0) lam[k] = 0.0;
  }
}

}  // namespace

Generator::Generator(std::shared_ptr<const SpaceModel> space, std::shared_ptr<const TrapEnvironment> env)
    : space_(std::move(space)), env_(std::move(env)) {
  if (&env_->space() != space_.get()) throw std::invalid_argument("generator: environment built on a different space");
  const int n = space_->vertex_count();
  for (int x = 0; x < n; ++x)
    if (!(env_->nu_mass(x) > 0.0)) throw std::invalid_argument("generator: nu mass must be positive");

  const bool chain = is_chain(*space_);
  if (!chain && n > kDenseSpectralCutoff) return;  // spectral data deferred; walker still works

  // nu-symmetrized matrix of -L: M = D^{-1/2} (Deg - C) D^{-1/2}
  SpectralData sd;
  if (chain) {
    std::vector<double> diag(n), off(n - 1);
    std::vector<double> edge_c(n - 1, 0.0);
    for (const auto& e : space_->edges()) edge_c[std::min(e.u, e.v)] = e.conductance;
    for (int i = 0; i < n; ++i) diag[i] = space_->degree(i) / env_->nu_mass(i);
    for (int i = 0; i + 1 < n; ++i)
      off[i] = -edge_c[i] / std::sqrt(env_->nu_mass(i) * env_->nu_mass(i + 1));
    sd = tridiagonal_eigensolve(std::move(diag), std::move(off));
  } else {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = space_->degree(i) / env_->nu_mass(i);
    for (const auto& e : space_->edges()) {
      const double v = -e.conductance / std::sqrt(env_->nu_mass(e.u) * env_->nu_mass(e.v));
      m(e.u, e.v) = v;
      m(e.v, e.u) = v;
    }
    sd = dense_eigensolve(m);
  }
  clamp_eigenvalues(sd.eigenvalues);
  eigenvalues_ = std::move(sd.eigenvalues);
  phi_ = std::move(sd.vectors);
  for (int x = 0; x < n; ++x) phi_.row(x) /= std::sqrt(env_->nu_mass(x));
  has_spectral_ = true;
}

std::vector<double> Generator::apply(std::span<const double> f) const {
  const int n = space_->vertex_count();
  if (static_cast<int>(f.size()) != n) throw std::invalid_argument("apply: size mismatch");
  std::vector<double> out(n, 0.0);
  for (int x = 0; x < n; ++x) {
    double acc = 0.0;
    for (auto [y, c] : space_->neighbours(x)) acc += c * (f[y] - f[x]);
    out[x] = acc / env_->nu_mass(x);
  }
  return out;
}

double Generator::heat_kernel_entry(double t, int x, int y) const {
  if (!(t > 0.0)) throw std::invalid_argument("heat_kernel_entry: t must be positive");
  if (!has_spectral_) throw std::logic_error("heat_kernel_entry: no spectral data for this size");
  const int n = space_->vertex_count();
  double acc = 0.0;
  for (int k = 0; k < n; ++k) acc += std::exp(-eigenvalues_[k] * t) * phi_(x, k) * phi_(y, k);
  return acc;
}

HeatKernelTable Generator::heat_kernel(const std::vector<double>& times) const {
  if (!has_spectral_) throw std::logic_error("heat_kernel: no spectral data for this size");
  HeatKernelTable table;
  table.env_seed = env_->seed();
  table.times = times;
  const int n = space_->vertex_count();
  Eigen::VectorXd weights(n);
  for (double t : times) {
    if (!(t > 0.0)) throw std::invalid_argument("heat_kernel: times must be positive");
    for (int k = 0; k < n; ++k) weights[k] = std::exp(-eigenvalues_[k] * t);
    table.values.emplace_back(phi_ * weights.asDiagonal() * phi_.transpose());
  }
  return table;
}

double GreenOperator::at(int x, int y) const {
  auto ix = std::lower_bound(domain.begin(), domain.end(), x);
  auto iy = std::lower_bound(domain.begin(), domain.end(), y);
  if (ix == domain.end() || *ix != x || iy == domain.end() || *iy != y)
    throw std::out_of_range("GreenOperator::at: vertex not in domain");
  return values(ix - domain.begin(), iy - domain.begin());
}

namespace {

std::vector<int> checked_domain(const Generator& gen, std::vector<int> domain) {
  const int n = gen.space().vertex_count();
  std::sort(domain.begin(), domain.end());
  domain.erase(std::unique(domain.begin(), domain.end()), domain.end());
  if (domain.empty()) throw std::invalid_argument("killed operator: empty domain");
  if (domain.front() < 0 || domain.back() >= n) throw std::out_of_range("killed operator: bad vertex");
  if (static_cast<int>(domain.size()) == n)
    throw std::invalid_argument("killed operator: domain must be a proper subset");
  return domain;
}

}  // namespace

GreenOperator green_killed(const Generator& gen, const std::vector<int>& domain_in) {
  GreenOperator green;
  green.domain = checked_domain(gen, domain_in);
  const auto& dom = green.domain;
  const int m = static_cast<int>(dom.size());
  std::vector<int> local(gen.space().vertex_count(), -1);
  for (int i = 0; i < m; ++i) local[dom[i]] = i;
  // graph-Laplacian sub-block (full degrees on the diagonal); SPD because the
  // complement is nonempty and absorbs
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) a(i, i) = gen.space().degree(dom[i]);
  for (const auto& e : gen.space().edges()) {
    if (local[e.u] >= 0 && local[e.v] >= 0) {
      a(local[e.u], local[e.v]) -= e.conductance;
      a(local[e.v], local[e.u]) -= e.conductance;
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw std::runtime_error("green_killed: factorization failed");
  green.values = llt.solve(Eigen::MatrixXd::Identity(m, m));
  return green;
}

std::vector<double> mean_exit_times(const Generator& gen, const std::vector<int>& domain) {
  GreenOperator green = green_killed(gen, domain);
  const int m = static_cast<int>(green.domain.size());
  Eigen::VectorXd nu(m);
  for (int i = 0; i < m; ++i) nu[i] = gen.env().nu_mass(green.domain[i]);
  Eigen::VectorXd e = green.values * nu;
  std::vector<double> out(gen.space().vertex_count(), 0.0);
  for (int i = 0; i < m; ++i) out[green.domain[i]] = e[i];
  return out;
}

KilledOperator::KilledOperator(const Generator& gen, std::vector<int> domain_in)
    : domain_(checked_domain(gen, std::move(domain_in))) {
  const int m = static_cast<int>(domain_.size());
  local_.assign(gen.space().vertex_count(), -1);
  for (int i = 0; i < m; ++i) local_[domain_[i]] = i;

  bool contiguous_chain = is_chain(gen.space());
  for (int i = 1; contiguous_chain && i < m; ++i)
    if (domain_[i] != domain_[i - 1] + 1) contiguous_chain = false;

  SpectralData sd;
  if (contiguous_chain) {
    std::vector<double> diag(m), off(std::max(m - 1, 0));
    std::vector<double> edge_c(gen.space().vertex_count(), 0.0);
    for (const auto& e : gen.space().edges()) edge_c[std::min(e.u, e.v)] = e.conductance;
    for (int i = 0; i < m; ++i) diag[i] = gen.space().degree(domain_[i]) / gen.env().nu_mass(domain_[i]);
    for (int i = 0; i + 1 < m; ++i)
      off[i] = -edge_c[domain_[i]] /
               std::sqrt(gen.env().nu_mass(domain_[i]) * gen.env().nu_mass(domain_[i + 1]));
    sd = tridiagonal_eigensolve(std::move(diag), std::move(off));
  } else {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i)
      a(i, i) = gen.space().degree(domain_[i]) / gen.env().nu_mass(domain_[i]);
    for (const auto& e : gen.space().edges()) {
      if (local_[e.u] >= 0 && local_[e.v] >= 0) {
        const double v = -e.conductance / std::sqrt(gen.env().nu_mass(e.u) * gen.env().nu_mass(e.v));
        a(local_[e.u], local_[e.v]) = v;
        a(local_[e.v], local_[e.u]) = v;
      }
    }
    sd = dense_eigensolve(a);
  }
  eigenvalues_ = std::move(sd.eigenvalues);
  phi_ = std::move(sd.vectors);
  ones_coeff_.resize(m);
  for (int i = 0; i < m; ++i) phi_.row(i) /= std::sqrt(gen.env().nu_mass(domain_[i]));
  for (int k = 0; k < m; ++k) {
    double acc = 0.0;
    for (int i = 0; i < m; ++i) acc += phi_(i, k) * gen.env().nu_mass(domain_[i]);
    ones_coeff_[k] = acc;
  }
}

int KilledOperator::local_index(int x) const {
  if (x < 0 || x >= static_cast<int>(local_.size()) || local_[x] < 0)
    throw std::out_of_range("killed operator: start vertex outside domain");
  return local_[x];
}

double KilledOperator::survival(int x, double t) const {
  const int i = local_index(x);
  double acc = 0.0;
  for (int k = 0; k < eigenvalues_.size(); ++k)
    acc += std::exp(-eigenvalues_[k] * t) * phi_(i, k) * ones_coeff_[k];
  return acc;
}

double KilledOperator::exit_cdf(int x, double t) const {
  const int i = local_index(x);
  double acc = 0.0;
  for (int k = 0; k < eigenvalues_.size(); ++k)
    acc += -std::expm1(-eigenvalues_[k] * t) * phi_(i, k) * ones_coeff_[k];
  return acc;
}

std::vector<double> KilledOperator::survival_curve(int x, const std::vector<double>& times) const {
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(survival(x, t));
  return out;
}

std::vector<double> KilledOperator::exit_cdf_curve(int x, const std::vector<double>& times) const {
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(exit_cdf(x, t));
  return out;
}

double KilledOperator::mean_exit(int x) const {
  const int i = local_index(x);
  double acc = 0.0;
  for (int k = 0; k < eigenvalues_.size(); ++k)
    acc += phi_(i, k) * ones_coeff_[k] / eigenvalues_[k];
  return acc;
}

std::vector<double> survival_probability(const Generator& gen, const std::vector<int>& domain, int x,
                                         const std::vector<double>& times) {
  return KilledOperator(gen, domain).survival_curve(x, times);
}

double dirichlet_energy(const SpaceModel& space, std::span<const double> f) {
  if (static_cast<int>(f.size()) != space.vertex_count())
    throw std::invalid_argument("dirichlet_energy: size mismatch");
  double acc = 0.0;
  for (const auto& e : space.edges()) {
    const double d = f[e.u] - f[e.v];
    acc += e.conductance * d * d;
  }
  return acc;
}

}  // namespace finsim
