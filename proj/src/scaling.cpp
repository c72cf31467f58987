#include "finsim/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "finsim/random.hpp"

namespace finsim {

ExponentSet exponent_set(double alpha, double beta, double d_f) {
  if (alpha <= 0.0 || alpha >= 1.0) throw std::invalid_argument("alpha must be in (0,1)");
  if (beta <= 0.0 || d_f <= 0.0) throw std::invalid_argument("beta, d_f must be positive");
  ExponentSet e;
  e.alpha = alpha;
  e.beta = beta;
  e.d_f = d_f;
  e.d_w = d_f / alpha + 1.0 / beta;
  e.d_s = 2.0 * d_f / (alpha * e.d_w);
  e.gamma = beta * d_f;
  e.q = 1.0 + e.gamma / alpha;
  e.alpha_c = (std::sqrt(e.gamma * e.gamma + 4.0 * e.gamma) - e.gamma) / 2.0;
  return e;
}

namespace {

enum class Scale { plain, log_corrected, loglog_corrected };

double scale_value(Scale s, const EnvelopeParams& p, double alpha, double r) {
  const double vr = p.v(r);
  double out = r * std::pow(vr, 1.0 / alpha);
  if (s == Scale::plain) return out;
  const double al = std::abs(std::log(vr));
  if (s == Scale::log_corrected) return out * std::pow(al, 1.0 - 1.0 / alpha);
  if (al <= 1.0) throw std::domain_error("log-log time scale needs |log v(r)| > 1");
  return out * std::pow(std::log(al), 1.0 - 1.0 / alpha);
}

double scale_inverse(Scale s, const EnvelopeParams& p, double alpha, double t) {
  if (t <= 0.0) throw std::invalid_argument("inverse time scale: t must be positive");
  // All three scales are increasing where v(r) < 1/e; cap the bracket there
  // for the corrected variants so bisection stays on a monotone branch.
  double hi = std::pow(std::exp(-1.5) / p.v_const, 1.0 / p.delta_f);
  if (s == Scale::plain) {
    while (scale_value(s, p, alpha, hi) < t) hi *= 2.0;
  } else if (scale_value(s, p, alpha, hi) < t) {
    throw std::domain_error("corrected time scale: t beyond the monotone (small-r) branch");
  }
  double lo = hi;
  while (scale_value(s, p, alpha, lo) > t) lo /= 2.0;
  for (int it = 0; it < 200 && (hi - lo) > 1e-10 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (scale_value(s, p, alpha, mid) < t ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double time_scale_h(const EnvelopeParams& p, double alpha, double r) { return scale_value(Scale::plain, p, alpha, r); }
double time_scale_h_l(const EnvelopeParams& p, double alpha, double r) { return scale_value(Scale::log_corrected, p, alpha, r); }
double time_scale_h_ll(const EnvelopeParams& p, double alpha, double r) { return scale_value(Scale::loglog_corrected, p, alpha, r); }
double inverse_h(const EnvelopeParams& p, double alpha, double t) { return scale_inverse(Scale::plain, p, alpha, t); }
double inverse_h_l(const EnvelopeParams& p, double alpha, double t) { return scale_inverse(Scale::log_corrected, p, alpha, t); }
double inverse_h_ll(const EnvelopeParams& p, double alpha, double t) { return scale_inverse(Scale::loglog_corrected, p, alpha, t); }

long long chain_count_N(double a, double t, double distance, const EnvelopeParams& params, double alpha) {
  if (a <= 0.0 || t <= 0.0 || distance <= 0.0) throw std::invalid_argument("chain_count_N: positive inputs required");
  auto ok = [&](long long n) {
    return a * t / double(n) <= time_scale_h(params, alpha, std::pow(distance / double(n), 1.0 / params.beta));
  };
  if (!ok(1)) return 0;
  long long lo = 1, hi = 2;
  while (ok(hi)) {
    lo = hi;
    if (hi > (1LL << 60)) throw std::runtime_error("chain_count_N: no finite bound (check exponents)");
    hi *= 2;
  }
  // predicate is an initial segment for power-law v; binary search the boundary
  while (hi - lo > 1) {
    const long long mid = lo + (hi - lo) / 2;
    (ok(mid) ? lo : hi) = mid;
  }
  return lo;
}

namespace {

struct Ols {
  double slope = 0.0, intercept = 0.0, stderr_slope = 0.0, r2 = 0.0;
};

Ols ols(std::span<const double> xs, std::span<const double> ys) {
  const int n = static_cast<int>(xs.size());
  double sx = 0, sy = 0;
  for (int i = 0; i < n; ++i) { sx += xs[i]; sy += ys[i]; }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  Ols o;
  if (sxx == 0.0) throw std::invalid_argument("fit: degenerate abscissa");
  o.slope = sxy / sxx;
  o.intercept = my - o.slope * mx;
  double rss = 0;
  for (int i = 0; i < n; ++i) {
    const double e = ys[i] - (o.intercept + o.slope * xs[i]);
    rss += e * e;
  }
  o.r2 = syy > 0 ? 1.0 - rss / syy : 1.0;
  o.stderr_slope = n > 2 ? std::sqrt(rss / (n - 2) / sxx) : 0.0;
  return o;
}

}  // namespace

FitResult linear_fit(std::span<const double> xs, std::span<const double> ys, int n_bootstrap,
                     std::uint64_t seed) {
  if (xs.size() != ys.size()) throw std::invalid_argument("fit: size mismatch");
  const int n = static_cast<int>(xs.size());
  if (n < 3) throw std::invalid_argument("fit: need at least 3 points");
  const Ols o = ols(xs, ys);
  FitResult fr;
  fr.exponent = o.slope;
  fr.intercept = o.intercept;
  fr.stderr_ = o.stderr_slope;
  fr.r_squared = o.r2;
  fr.n_points = n;
  fr.window_lo = *std::min_element(xs.begin(), xs.end());
  fr.window_hi = *std::max_element(xs.begin(), xs.end());
  if (n_bootstrap > 0) {
    RngStream rng = make_stream(seed);
    std::uniform_int_distribution<int> pick(0, n - 1);
    std::vector<double> bx(n), by(n), slopes;
    slopes.reserve(n_bootstrap);
    for (int b = 0; b < n_bootstrap; ++b) {
      for (int i = 0; i < n; ++i) {
        const int j = pick(rng);
        bx[i] = xs[j];
        by[i] = ys[j];
      }
      try {
        slopes.push_back(ols(bx, by).slope);
      } catch (const std::invalid_argument&) {
        // degenerate resample (all same x); skip
      }
    }
    if (!slopes.empty()) {
      std::sort(slopes.begin(), slopes.end());
      auto q = [&](double p) { return slopes[std::min(slopes.size() - 1, size_t(p * slopes.size()))]; };
      fr.ci_lo = q(0.025);
      fr.ci_hi = q(0.975);
    } else {
      fr.ci_lo = fr.ci_hi = fr.exponent;
    }
    fr.ci_lo = std::min(fr.ci_lo, fr.exponent);
    fr.ci_hi = std::max(fr.ci_hi, fr.exponent);
  } else {
    fr.ci_lo = fr.ci_hi = fr.exponent;
  }
  return fr;
}

FitResult fit_power_law(std::span<const double> xs, std::span<const double> ys, double window_lo,
                        double window_hi, int n_bootstrap, std::uint64_t seed) {
  if (xs.size() != ys.size()) throw std::invalid_argument("fit: size mismatch");
  std::vector<double> lx, ly;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] < window_lo || xs[i] > window_hi) continue;
    if (xs[i] <= 0.0 || ys[i] <= 0.0) throw std::invalid_argument("fit_power_law: positive data required");
    lx.push_back(std::log(xs[i]));
    ly.push_back(std::log(ys[i]));
  }
  FitResult fr = linear_fit(lx, ly, n_bootstrap, seed);
  fr.window_lo = window_lo;
  fr.window_hi = window_hi;
  return fr;
}

AnnealedCurve annealed_average(const std::vector<HeatKernelTable>& tables, int x, int y) {
  if (tables.size() < 2) throw std::invalid_argument("annealed_average: ensemble must have >= 2 tables");
  const auto& times = tables.front().times;
  for (const auto& tb : tables) {
    if (tb.times != times) throw std::invalid_argument("annealed_average: mismatched time grids");
    if (tb.values.size() != times.size()) throw std::invalid_argument("annealed_average: malformed table");
  }
  const int n = static_cast<int>(tables.size());
  const int trim = std::max(1, int(std::ceil(0.01 * n)));
  AnnealedCurve out;
  out.x = x;
  out.y = y;
  out.times = times;
  std::vector<double> vals(n);
  for (size_t ti = 0; ti < times.size(); ++ti) {
    double s = 0.0;
    for (int e = 0; e < n; ++e) {
      vals[e] = tables[e].values[ti](x, y);
      s += vals[e];
    }
    const double mean = s / n;
    double var = 0.0;
    for (int e = 0; e < n; ++e) var += (vals[e] - mean) * (vals[e] - mean);
    var /= (n - 1);
    const double half = 1.96 * std::sqrt(var / n);
    out.mean.push_back(mean);
    out.ci_lo.push_back(mean - half);
    out.ci_hi.push_back(mean + half);
    std::nth_element(vals.begin(), vals.end() - trim, vals.end());
    double ts = 0.0;
    for (int e = 0; e < n - trim; ++e) ts += vals[e];
    out.trimmed_mean.push_back(ts / (n - trim));
  }
  return out;
}

CorrectionReport quenched_correction_fit(const std::vector<double>& times,
                                         const std::vector<double>& p_diag,
                                         const EnvelopeParams& params, double alpha) {
  if (times.size() != p_diag.size() || times.size() < 3)
    throw std::invalid_argument("quenched_correction_fit: malformed curve");
  if (!std::is_sorted(times.begin(), times.end())) throw std::invalid_argument("times must be increasing");
  if (times.back() / times.front() < 100.0)
    throw std::invalid_argument("quenched_correction_fit: need >= 2 decades of t");
  CorrectionReport rep;
  rep.times = times;
  auto run = [&](Scale s, std::vector<double>& series, CorrectionBand& band) {
    band.min = std::numeric_limits<double>::infinity();
    band.max = 0.0;
    for (size_t i = 0; i < times.size(); ++i) {
      const double r = scale_inverse(s, params, alpha, times[i]);
      const double ratio = p_diag[i] * times[i] / r;
      series.push_back(ratio);
      if (ratio < band.min) { band.min = ratio; band.argmin_t = times[i]; }
      if (ratio > band.max) { band.max = ratio; band.argmax_t = times[i]; }
    }
  };
  run(Scale::plain, rep.ratio_h, rep.band_h);
  run(Scale::log_corrected, rep.ratio_hl, rep.band_hl);
  run(Scale::loglog_corrected, rep.ratio_hll, rep.band_hll);
  return rep;
}

OffdiagFit offdiag_profile_fit(const OffdiagData& data, const ExponentSet& exps) {
  if (data.times.size() != data.dist.size() || data.times.size() != data.ratio.size())
    throw std::invalid_argument("offdiag_profile_fit: size mismatch");
  const double dw = exps.d_w;
  const double stretch = 1.0 / (dw - 1.0);
  std::vector<double> arg, xi, y;  // arg = d^dw/t, xi = arg^stretch, y = -log ratio
  for (size_t i = 0; i < data.times.size(); ++i) {
    const double a = std::pow(data.dist[i], dw) / data.times[i];
    if (a <= 1.0) continue;  // keep to the genuinely off-diagonal regime
    if (data.ratio[i] <= 0.0 || data.ratio[i] >= 1.0) continue;
    arg.push_back(a);
    xi.push_back(std::pow(a, stretch));
    y.push_back(-std::log(data.ratio[i]));
  }
  if (arg.size() < 3) throw std::invalid_argument("offdiag_profile_fit: too few usable points");
  const double amax = *std::max_element(arg.begin(), arg.end());
  if (amax < 10.0) throw std::invalid_argument("offdiag_profile_fit: d^dw/t must span a decade above 1");
  OffdiagFit out;
  out.fixed = linear_fit(xi, y);
  out.stretch_free = fit_power_law(arg, y, 0.0, std::numeric_limits<double>::infinity());
  return out;
}

ExitTailFit exit_tail_fit(const std::vector<ExitTailCurve>& curves, double alpha, double cdf_floor,
                          double cdf_ceil) {
  if (curves.empty()) throw std::invalid_argument("exit_tail_fit: no curves");
  ExitTailFit out;
  std::vector<double> slopes;
  for (const auto& c : curves) {
    if (c.times.size() != c.cdf.size()) throw std::invalid_argument("exit_tail_fit: malformed curve");
    std::vector<double> xs, ys;
    double min_cdf = 1.0;
    for (size_t i = 0; i < c.times.size(); ++i) {
      min_cdf = std::min(min_cdf, c.cdf[i]);
      if (c.cdf[i] < cdf_floor || c.cdf[i] > cdf_ceil) continue;
      xs.push_back(std::pow(c.times[i], -alpha));
      ys.push_back(-std::log(c.cdf[i]));
    }
    if (min_cdf > 0.01) throw std::invalid_argument("exit_tail_fit: curve does not reach the small-t regime");
    out.inner.push_back(linear_fit(xs, ys));
    out.Ds.push_back(c.D);
    slopes.push_back(out.inner.back().exponent);
  }
  if (curves.size() >= 3) {
    out.outer = fit_power_law(out.Ds, slopes, 0.0, std::numeric_limits<double>::infinity());
  } else if (curves.size() == 2) {
    out.outer.exponent = std::log(slopes[1] / slopes[0]) / std::log(out.Ds[1] / out.Ds[0]);
    out.outer.n_points = 2;
    out.outer.ci_lo = out.outer.ci_hi = out.outer.exponent;
  }
  return out;
}

}  // namespace finsim
