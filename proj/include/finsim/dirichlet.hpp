#pragma once

#include <Eigen/Dense>
#include <memory>
#include <span>
#include <vector>

#include "finsim/trap_environment.hpp"

namespace finsim {

struct HeatKernelTable {
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> values;  // values[i](x,y) = p_{times[i]}(x,y)
  std::uint64_t env_seed = 0;
};

/// Generator of the speed-measure chain: (Lf)(x) = nu(x)^{-1} sum_y c_xy (f(y)-f(x)).
/// Self-adjoint in the nu-weighted inner product. Spectral data is computed at
/// construction for spaces up to the dense cutoff, and for chains of any size
/// (tridiagonal solve).
class Generator {
 public:
  static constexpr int kDenseSpectralCutoff = 5000;

  Generator(std::shared_ptr<const SpaceModel> space, std::shared_ptr<const TrapEnvironment> env);

  const SpaceModel& space() const { return *space_; }
  const TrapEnvironment& env() const { return *env_; }
  std::shared_ptr<const TrapEnvironment> env_ptr() const { return env_; }

  /// jump rate out of x: (sum_y c_xy) / nu(x)
  double rate(int x) const { return space_->degree(x) / env_->nu_mass(x); }

  /// (Lf)(x)
  std::vector<double> apply(std::span<const double> f) const;

  bool has_spectral() const { return has_spectral_; }
  /// eigenvalues of -L, ascending, clamped to be >= 0
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  /// nu-orthonormal eigenvectors, column k for eigenvalue k
  const Eigen::MatrixXd& phi() const { return phi_; }

  /// p_t(x,y) = sum_k exp(-lambda_k t) phi_k(x) phi_k(y)
  double heat_kernel_entry(double t, int x, int y) const;
  HeatKernelTable heat_kernel(const std::vector<double>& times) const;

 private:
  std::shared_ptr<const SpaceModel> space_;
  std::shared_ptr<const TrapEnvironment> env_;
  bool has_spectral_ = false;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd phi_;
};

inline Generator build_generator(std::shared_ptr<const SpaceModel> space,
                                 std::shared_ptr<const TrapEnvironment> env) {
  return Generator(std::move(space), std::move(env));
}

/// Green operator of the process killed on exiting `domain`:
/// g(x,y) symmetric, E_x T = sum_y g(x,y) nu(y).
struct GreenOperator {
  std::vector<int> domain;       // sorted global vertex ids
  Eigen::MatrixXd values;        // indexed by position within domain
  double at(int x, int y) const; // by global vertex id
};

GreenOperator green_killed(const Generator& gen, const std::vector<int>& domain);

/// E_x T_B for every vertex (zero off the domain).
std::vector<double> mean_exit_times(const Generator& gen, const std::vector<int>& domain);

/// Spectral data of the generator killed outside a domain; gives exact
/// survival probabilities P_x(T_B > t).
class KilledOperator {
 public:
  KilledOperator(const Generator& gen, std::vector<int> domain);

  const std::vector<int>& domain() const { return domain_; }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }

  double survival(int x, double t) const;
  /// P_x(T_B <= t) accumulated as sum_k w_k (1 - exp(-lambda_k t)); avoids the
  /// 1 - survival cancellation at small t.
  double exit_cdf(int x, double t) const;
  std::vector<double> survival_curve(int x, const std::vector<double>& times) const;
  std::vector<double> exit_cdf_curve(int x, const std::vector<double>& times) const;
  /// E_x T_B from the spectral form.
  double mean_exit(int x) const;

 private:
  int local_index(int x) const;
  std::vector<int> domain_;
  std::vector<int> local_;  // global -> local or -1
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd phi_;        // local nu-orthonormal eigenvectors
  Eigen::VectorXd ones_coeff_; // <phi_k, 1>_nu over the domain
};

std::vector<double> survival_probability(const Generator& gen, const std::vector<int>& domain, int x,
                                         const std::vector<double>& times);

/// E(f,f) = 1/2 sum_{x,y} c_xy (f(x)-f(y))^2
double dirichlet_energy(const SpaceModel& space, std::span<const double> f);

}  // namespace finsim
