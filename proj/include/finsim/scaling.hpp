#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "finsim/dirichlet.hpp"
#include "finsim/volume_analytics.hpp"

namespace finsim {

/// Closed-form exponent family of the trapped process.
struct ExponentSet {
  double alpha = 0.0;
  double beta = 0.0;
  double d_f = 0.0;
  double d_w = 0.0;      // d_f/alpha + 1/beta
  double d_s = 0.0;      // 2 d_f / (alpha d_w)
  double gamma = 0.0;    // beta * d_f (polynomial volume in the resistance metric)
  double q = 0.0;        // 1 + gamma/alpha
  double alpha_c = 0.0;  // (sqrt(gamma^2+4gamma) - gamma)/2
};

ExponentSet exponent_set(double alpha, double beta, double d_f);

/// Natural time scale h(r) = r v(r)^{1/alpha} and its log / log-log corrected
/// variants; inverses by monotone bisection to relative tolerance 1e-10.
double time_scale_h(const EnvelopeParams& params, double alpha, double r);
double time_scale_h_l(const EnvelopeParams& params, double alpha, double r);
double time_scale_h_ll(const EnvelopeParams& params, double alpha, double r);
double inverse_h(const EnvelopeParams& params, double alpha, double t);
double inverse_h_l(const EnvelopeParams& params, double alpha, double t);
double inverse_h_ll(const EnvelopeParams& params, double alpha, double t);

/// Largest n >= 1 with a*t/n <= h((distance/n)^{1/beta}); 0 when n = 1 already
/// fails. Exponential bracketing plus binary search on the exact predicate.
long long chain_count_N(double a, double t, double distance, const EnvelopeParams& params, double alpha);

struct FitResult {
  double exponent = 0.0;
  double intercept = 0.0;
  double stderr_ = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  double r_squared = 0.0;
  double ci_lo = 0.0;  // bootstrap 95%
  double ci_hi = 0.0;
  int n_points = 0;
};

/// Least squares of y = intercept + exponent * x with a percentile bootstrap CI.
FitResult linear_fit(std::span<const double> xs, std::span<const double> ys, int n_bootstrap = 1000,
                     std::uint64_t seed = 1u);

/// Least squares on (log x, log y) restricted to xs in [window_lo, window_hi].
FitResult fit_power_law(std::span<const double> xs, std::span<const double> ys, double window_lo,
                        double window_hi, int n_bootstrap = 1000, std::uint64_t seed = 1u);

struct AnnealedCurve {
  int x = 0, y = 0;
  std::vector<double> times;
  std::vector<double> mean;
  std::vector<double> ci_lo, ci_hi;   // normal-approximation 95%
  std::vector<double> trimmed_mean;   // top 1% per time point dropped
};

/// Pointwise ensemble mean of p_t(x,y) across environments.
AnnealedCurve annealed_average(const std::vector<HeatKernelTable>& tables, int x, int y);

struct CorrectionBand {
  double min = 0.0, max = 0.0;
  double argmin_t = 0.0, argmax_t = 0.0;
};

/// Ratio series p_t(x,x) * t / h^{-1}(t) and its h_l / h_ll analogues.
struct CorrectionReport {
  std::vector<double> times;
  std::vector<double> ratio_h, ratio_hl, ratio_hll;
  CorrectionBand band_h, band_hl, band_hll;
};

CorrectionReport quenched_correction_fit(const std::vector<double>& times,
                                         const std::vector<double>& p_diag,
                                         const EnvelopeParams& params, double alpha);

/// One annealed off-diagonal observation: t, comparison-metric distance,
/// and the ratio p_t(0,x)/p_t(0,0).
struct OffdiagData {
  std::vector<double> times;
  std::vector<double> dist;
  std::vector<double> ratio;
};

struct OffdiagFit {
  FitResult stretch_free;  // log(-log ratio) vs log(d^{d_w}/t); expect 1/(d_w-1)
  FitResult fixed;         // -log ratio vs (d^{d_w}/t)^{1/(d_w-1)}, linearity check
};

OffdiagFit offdiag_profile_fit(const OffdiagData& data, const ExponentSet& exps);

struct ExitTailCurve {
  double D = 0.0;
  std::vector<double> times;
  std::vector<double> cdf;  // P(tau_D <= t)
};

struct ExitTailFit {
  std::vector<double> Ds;
  std::vector<FitResult> inner;  // -log P vs t^{-alpha}, slope s(D)
  FitResult outer;               // log s(D) vs log D; expect 1 + alpha
};

/// Points with cdf outside [cdf_floor, cdf_ceil] are excluded from the inner
/// fits (the relation is a small-t tail law).
ExitTailFit exit_tail_fit(const std::vector<ExitTailCurve>& curves, double alpha,
                          double cdf_floor = 1e-12, double cdf_ceil = 0.9);

}  // namespace finsim
