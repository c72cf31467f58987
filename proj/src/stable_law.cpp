#include "finsim/stable_law.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace finsim {

StableLaw::StableLaw(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("StableLaw: alpha must be in (0,1)");
  laplace_scale_ = std::tgamma(1.0 - alpha);
}

double StableLaw::laplace_exponent(double lambda) const {
  if (lambda < 0.0) throw std::invalid_argument("laplace_exponent: lambda must be >= 0");
  return laplace_scale_ * std::pow(lambda, alpha_);
}

double StableLaw::sample_standard(RngStream& rng) const {
  // Kanter: S = (Z(U)/E)^{(1-a)/a}, Z(u) = [sin(au)^a sin((1-a)u)^{1-a} / sin(u)]^{1/(1-a)}
  std::uniform_real_distribution<double> unif(0.0, std::numbers::pi);
  std::exponential_distribution<double> expo(1.0);
  const double a = alpha_;
  double u = unif(rng);
  while (u <= 0.0 || u >= std::numbers::pi) u = unif(rng);
  const double e = expo(rng);
  const double z = std::pow(std::pow(std::sin(a * u), a) * std::pow(std::sin((1.0 - a) * u), 1.0 - a) /
                                std::sin(u),
                            1.0 / (1.0 - a));
  return std::pow(z / e, (1.0 - a) / a);
}

double StableLaw::sample_increment(double duration, RngStream& rng) const {
  if (!(duration > 0.0)) throw std::invalid_argument("sample_increment: duration must be positive");
  return std::pow(laplace_scale_ * duration, 1.0 / alpha_) * sample_standard(rng);
}

std::vector<double> StableLaw::sample_path(const std::vector<double>& grid, RngStream& rng) const {
  std::vector<double> out;
  out.reserve(grid.size());
  double prev_t = 0.0, value = 0.0;
  for (double t : grid) {
    if (!(t > prev_t)) throw std::invalid_argument("sample_path: grid must be strictly increasing, positive");
    value += sample_increment(t - prev_t, rng);
    out.push_back(value);
    prev_t = t;
  }
  return out;
}

double StableLaw::to_standard_scale(double x) const {
  return x * std::pow(laplace_scale_, -1.0 / alpha_);
}

double StableLaw::small_ball_rate(double alpha) {
  return (1.0 - alpha) * std::pow(alpha, alpha / (1.0 - alpha));
}

double StableLaw::small_ball_prefactor(double alpha) {
  return 1.0 / std::sqrt(2.0 * std::numbers::pi * (1.0 - alpha) * std::pow(alpha, 1.0 / (1.0 - alpha)));
}

double StableLaw::small_ball_asymptote(double alpha, double x) {
  if (!(x > 0.0)) throw std::invalid_argument("small_ball_asymptote: x must be positive");
  return small_ball_prefactor(alpha) * std::pow(x, alpha / (2.0 * (1.0 - alpha))) *
         std::exp(-small_ball_rate(alpha) * std::pow(x, -alpha / (1.0 - alpha)));
}

double StableLaw::upper_tail_bound(double alpha, double x) {
  if (!(x > 0.0)) throw std::invalid_argument("upper_tail_bound: x must be positive");
  // P(S >= x) <= (1 - E e^{-S/x}) / (1 - e^{-1}) <= x^{-alpha} / (1 - e^{-1})
  return upper_tail_constant() * std::pow(x, -alpha);
}

double StableLaw::chung_constant(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("chung_constant: alpha must be in (0,1)");
  return alpha * std::pow(1.0 - alpha, (1.0 - alpha) / alpha);
}

double StableLaw::half_alpha_cdf_standard(double x) {
  if (x <= 0.0) return 0.0;
  return std::erfc(1.0 / (2.0 * std::sqrt(x)));
}

double StableLaw::half_alpha_cdf(double t, double x) {
  // L_t = (Gamma(1/2) t)^2 S = pi t^2 S
  if (x <= 0.0) return 0.0;
  return half_alpha_cdf_standard(x / (std::numbers::pi * t * t));
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;  // ties must advance both ecdfs together
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return d;
}

}  // namespace finsim
