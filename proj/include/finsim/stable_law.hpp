#pragma once

#include <vector>

#include "finsim/random.hpp"

namespace finsim {

/// One-sided alpha-stable subordinator L with Levy measure alpha*v^{-1-alpha}dv,
/// i.e. E[exp(-lambda L_t)] = exp(-t * Gamma(1-alpha) * lambda^alpha).
///
/// The "standard" convention E[exp(-lambda S)] = exp(-lambda^alpha) is exposed
/// alongside; L_t = (Gamma(1-alpha) t)^{1/alpha} * S in distribution.
class StableLaw {
 public:
  explicit StableLaw(double alpha);

  double alpha() const { return alpha_; }
  /// Gamma(1-alpha), the Laplace-exponent prefactor induced by the Levy measure.
  double laplace_scale() const { return laplace_scale_; }

  /// Gamma(1-alpha) * lambda^alpha
  double laplace_exponent(double lambda) const;

  /// Exact sample of L_duration (Kanter representation, rejection-free).
  double sample_increment(double duration, RngStream& rng) const;
  /// Sample of S under the standard normalization exp(-lambda^alpha).
  double sample_standard(RngStream& rng) const;

  /// Subordinator values on a strictly increasing positive time grid
  /// (independent increments).
  std::vector<double> sample_path(const std::vector<double>& grid, RngStream& rng) const;

  /// Converts an argument of the standard-normalization tail laws to the
  /// Levy-measure normalization used by sample_increment.
  double to_standard_scale(double x) const;

  /// x -> 0 asymptote of P(S_t <= x t^{1/alpha}) under the standard
  /// normalization: C1 * x^{alpha/(2(1-alpha))} * exp(-C2 * x^{-alpha/(1-alpha)}).
  static double small_ball_asymptote(double alpha, double x);
  /// C2 = (1-alpha) * alpha^{alpha/(1-alpha)}
  static double small_ball_rate(double alpha);
  /// Saddle-point prefactor C1 = (2*pi*(1-alpha)*alpha^{1/(1-alpha)})^{-1/2}.
  static double small_ball_prefactor(double alpha);

  /// Provable bound P(S_t >= x t^{1/alpha}) <= C3 * x^{-alpha}, standard
  /// normalization, with C3 = 1/(1 - e^{-1}).
  static double upper_tail_bound(double alpha, double x);
  static double upper_tail_constant() { return 1.0 / (1.0 - 1.0 / 2.718281828459045235); }

  /// alpha * (1-alpha)^{(1-alpha)/alpha}
  static double chung_constant(double alpha);

  /// Closed form at alpha = 1/2 (standard normalization): P(S <= x) = erfc(1/(2*sqrt(x))).
  static double half_alpha_cdf_standard(double x);
  /// Closed form for P(L_t <= x) at alpha = 1/2 under the Levy-measure normalization.
  static double half_alpha_cdf(double t, double x);

 private:
  double alpha_;
  double laplace_scale_;
};

/// Two-sample Kolmogorov-Smirnov statistic (max CDF gap); sorts copies.
double ks_statistic(std::vector<double> a, std::vector<double> b);

}  // namespace finsim
