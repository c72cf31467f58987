#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "finsim/random.hpp"
#include "finsim/scaling.hpp"

using namespace finsim;

namespace {

EnvelopeParams line_params() {
  EnvelopeParams p;  // v(r) = r
  p.delta_f = 1.0;
  p.v_const = 1.0;
  p.c_d = 2.0;
  p.gamma = 1.0;
  p.beta = 1.0;
  return p;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = lo * std::pow(hi / lo, double(i) / (n - 1));
  return out;
}

}  // namespace

TEST_CASE("exponent family closed forms") {
  // one-dimensional case: gamma = 1, alpha_c = golden ratio conjugate
  auto e = exponent_set(0.5, 1.0, 1.0);
  CHECK(e.d_w == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(e.d_s == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
  CHECK(e.gamma == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(e.q == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(std::abs(e.alpha_c - (std::sqrt(5.0) - 1.0) / 2.0) < 1e-12);

  // nested-triangle case: beta = log2, d_f = log3/log2 in the geodesic metric,
  // gamma = log3/log(5/3) in the resistance metric
  const double beta = std::log(2.0) / std::log(5.0 / 3.0);
  const double d_f = std::log(3.0) / std::log(2.0);
  auto g = exponent_set(0.5, beta, d_f);
  CHECK(g.gamma == doctest::Approx(std::log(3.0) / std::log(5.0 / 3.0)).epsilon(1e-12));
  CHECK(std::abs(g.alpha_c - 0.7434) < 5e-4);

  // alpha -> 1 recovers the untrapped exponents
  auto u = exponent_set(1.0 - 1e-7, 1.0, 1.0);
  CHECK(std::abs(u.d_w - 2.0) < 1e-4);
  CHECK(std::abs(u.d_s - 1.0) < 1e-4);

  // spectral identity d_s d_w alpha = 2 d_f on random parameters
  RngStream rng = make_stream(7);
  std::uniform_real_distribution<double> ua(0.05, 0.95), ub(0.3, 3.0);
  for (int i = 0; i < 50; ++i) {
    const double a = ua(rng), b = ub(rng), df = ub(rng);
    auto s = exponent_set(a, b, df);
    CHECK(std::abs(s.d_s * s.d_w * a - 2.0 * df) < 1e-12);
    CHECK(s.alpha_c > 0.0);
    CHECK(s.alpha_c < 1.0);
    // defining property: alpha_c^2 + gamma*alpha_c - gamma = 0
    CHECK(std::abs(s.alpha_c * s.alpha_c + s.gamma * s.alpha_c - s.gamma) < 1e-10);
  }
  CHECK_THROWS(exponent_set(0.0, 1.0, 1.0));
  CHECK_THROWS(exponent_set(1.5, 1.0, 1.0));
}

TEST_CASE("time scale h and inverses") {
  auto p = line_params();
  // v(r)=r, alpha=1/2: h(r) = r * r^2 = r^3, inverse_h(t) = t^{1/3}
  CHECK(time_scale_h(p, 0.5, 2.0) == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(inverse_h(p, 0.5, 8.0) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(inverse_h(p, 0.5, 1e-6) == doctest::Approx(1e-2).epsilon(1e-9));

  // direct formulas for the corrected variants
  for (double r : {0.001, 0.05, 0.2}) {
    const double v = r;
    CHECK(time_scale_h_l(p, 0.5, r) ==
          doctest::Approx(r * v * v * std::pow(std::abs(std::log(v)), -1.0)).epsilon(1e-12));
    CHECK(time_scale_h_ll(p, 0.5, r) ==
          doctest::Approx(r * v * v * std::pow(std::log(std::abs(std::log(v))), -1.0)).epsilon(1e-12));
  }

  // inverse roundtrips on a log grid inside the monotone branch
  for (double alpha : {0.3, 0.5, 0.8})
    for (double r : log_grid(1e-5, 0.2, 15)) {
      CHECK(inverse_h(p, alpha, time_scale_h(p, alpha, r)) == doctest::Approx(r).epsilon(1e-9));
      CHECK(inverse_h_l(p, alpha, time_scale_h_l(p, alpha, r)) == doctest::Approx(r).epsilon(1e-9));
      CHECK(inverse_h_ll(p, alpha, time_scale_h_ll(p, alpha, r)) == doctest::Approx(r).epsilon(1e-9));
    }
  // beyond the monotone branch the corrected inverses refuse
  CHECK_THROWS(inverse_h_l(p, 0.5, 1e6));
}

TEST_CASE("chain count") {
  auto p = line_params();
  // a=t=1, D=10, h(r)=r^3: predicate 1/n <= (10/n)^3, n^2 <= 1000 -> N=31
  CHECK(chain_count_N(1.0, 1.0, 10.0, p, 0.5) == 31);
  CHECK(chain_count_N(1.0, 2.0, 1.0, p, 0.5) == 0);  // already fails at n=1
  // larger t loosens the per-step budget constraint less than it tightens the
  // total: N is nonincreasing in t
  long long prev = std::numeric_limits<long long>::max();
  for (double t : log_grid(0.01, 100.0, 12)) {
    const long long n = chain_count_N(1.0, t, 5.0, p, 0.5);
    CHECK(n <= prev);
    prev = n;
  }
  // brute-force agreement on random draws
  RngStream rng = make_stream(11);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  for (int i = 0; i < 100; ++i) {
    const double a = u(rng), t = u(rng), D = u(rng);
    const long long N = chain_count_N(a, t, D, p, 0.5);
    REQUIRE(N <= 2'000'000);
    auto ok = [&](long long n) {
      return a * t / double(n) <= time_scale_h(p, 0.5, std::pow(D / double(n), 1.0 / p.beta));
    };
    if (N == 0) {
      CHECK(!ok(1));
    } else {
      CHECK(ok(N));
      CHECK(!ok(N + 1));
    }
  }
}

TEST_CASE("linear and power-law fits") {
  // exact line
  std::vector<double> xs, ys;
  for (double x = 0.0; x < 10.0; x += 0.5) {
    xs.push_back(x);
    ys.push_back(3.0 - 2.0 * x);
  }
  auto f = linear_fit(xs, ys);
  CHECK(f.exponent == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.ci_lo <= f.exponent);
  CHECK(f.ci_hi >= f.exponent);
  CHECK(f.n_points == int(xs.size()));

  // exact power law y = 4 x^{1.5}
  std::vector<double> px = log_grid(0.1, 100.0, 25), py;
  for (double x : px) py.push_back(4.0 * std::pow(x, 1.5));
  auto pf = fit_power_law(px, py, 0.0, 1e9);
  CHECK(pf.exponent == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(std::exp(pf.intercept) == doctest::Approx(4.0).epsilon(1e-10));
  CHECK(pf.r_squared == doctest::Approx(1.0).epsilon(1e-12));

  // windowing: corrupt points outside the window must not matter
  auto py2 = py;
  for (size_t i = 0; i < px.size(); ++i)
    if (px[i] < 1.0 || px[i] > 50.0) py2[i] *= 7.0;
  auto wf = fit_power_law(px, py2, 1.0, 50.0);
  CHECK(wf.exponent == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(wf.n_points < int(px.size()));
  CHECK(wf.window_lo == 1.0);
  CHECK(wf.window_hi == 50.0);

  // scale equivariance of the power-law exponent
  std::vector<double> px3 = px;
  for (double& x : px3) x *= 13.0;
  auto sf = fit_power_law(px3, py, 0.0, 1e12);
  CHECK(sf.exponent == doctest::Approx(1.5).epsilon(1e-10));

  // noisy synthetic: recovered within the CI
  RngStream rng = make_stream(13);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<double> ny;
  for (double x : px) ny.push_back(4.0 * std::pow(x, 1.5) * std::exp(noise(rng)));
  auto nf = fit_power_law(px, ny, 0.0, 1e9);
  CHECK(nf.exponent > 1.45);
  CHECK(nf.exponent < 1.55);
  CHECK(nf.ci_lo < nf.ci_hi);
  CHECK(nf.stderr_ > 0.0);

  CHECK_THROWS(linear_fit(std::vector<double>{1.0}, std::vector<double>{1.0}));
  CHECK_THROWS(fit_power_law(px, py, 200.0, 300.0));  // empty window
}

TEST_CASE("annealed averaging") {
  HeatKernelTable a, b;
  a.times = b.times = {0.1, 1.0, 10.0};
  for (double s : {1.0, 3.0}) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(2, 2, s);
    (s == 1.0 ? a : b).values = {m, 2 * m, 3 * m};
  }
  auto avg = annealed_average({a, b}, 0, 0);
  REQUIRE(avg.mean.size() == 3);
  CHECK(avg.mean[0] == doctest::Approx(2.0));
  CHECK(avg.mean[1] == doctest::Approx(4.0));
  CHECK(avg.mean[2] == doctest::Approx(6.0));
  CHECK(avg.ci_lo[0] <= avg.mean[0]);
  CHECK(avg.ci_hi[0] >= avg.mean[0]);

  // identical tables: zero-width CI, mean equals the table
  auto same = annealed_average({a, a, a}, 0, 1);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(same.mean[i] == doctest::Approx(a.values[i](0, 1)));
    CHECK(same.ci_hi[i] - same.ci_lo[i] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(same.trimmed_mean[i] == doctest::Approx(same.mean[i]));
  }
  // permutation invariance
  auto perm = annealed_average({b, a}, 0, 0);
  for (size_t i = 0; i < 3; ++i) CHECK(perm.mean[i] == doctest::Approx(avg.mean[i]));
  CHECK_THROWS(annealed_average({a}, 0, 0));
  HeatKernelTable c = a;
  c.times[1] = 2.0;
  CHECK_THROWS(annealed_average({a, c}, 0, 0));
}

TEST_CASE("quenched correction bands") {
  auto p = line_params();
  const double alpha = 0.5;
  auto times = log_grid(1e-8, 1e-3, 60);
  // synthetic diagonal p_t = 1/(t^{... }) built to make the h-ratio exactly 1
  std::vector<double> diag;
  for (double t : times) diag.push_back(inverse_h(p, alpha, t) / t);
  auto rep = quenched_correction_fit(times, diag, p, alpha);
  REQUIRE(rep.ratio_h.size() == times.size());
  for (double r : rep.ratio_h) CHECK(r == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rep.band_h.max / rep.band_h.min == doctest::Approx(1.0).epsilon(1e-9));
  // the h_l and h_ll ratios wander by log / log-log factors only
  CHECK(rep.band_hl.min > 0.0);
  CHECK(rep.band_hll.min > 0.0);

  // a diagonal built from the log-log scale flattens the h_ll band instead
  std::vector<double> diag2;
  for (double t : times) diag2.push_back(inverse_h_ll(p, alpha, t) / t);
  auto rep2 = quenched_correction_fit(times, diag2, p, alpha);
  CHECK(rep2.band_hll.max / rep2.band_hll.min == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rep2.band_h.max / rep2.band_h.min > rep2.band_hll.max / rep2.band_hll.min);

  CHECK_THROWS(quenched_correction_fit({1.0, 1.1}, {1.0, 1.0}, p, alpha));  // < 2 decades
}

TEST_CASE("off-diagonal stretched-exponential fit") {
  auto exps = exponent_set(0.5, 1.0, 1.0);  // d_w = 3
  OffdiagData data;
  RngStream rng = make_stream(17);
  std::uniform_real_distribution<double> ud(0.5, 4.0), ut(1e-4, 0.05);
  const double c = 0.7;
  for (int i = 0; i < 400; ++i) {
    const double d = ud(rng), t = ut(rng);
    const double a = std::pow(d, exps.d_w) / t;
    if (a <= 1.0) continue;
    data.times.push_back(t);
    data.dist.push_back(d);
    data.ratio.push_back(std::exp(-c * std::pow(a, 1.0 / (exps.d_w - 1.0))));
  }
  auto fit = offdiag_profile_fit(data, exps);
  CHECK(fit.stretch_free.exponent == doctest::Approx(1.0 / (exps.d_w - 1.0)).epsilon(1e-6));
  CHECK(fit.fixed.exponent == doctest::Approx(c).epsilon(1e-6));
  CHECK(fit.fixed.r_squared > 0.999999);
  OffdiagData empty;
  CHECK_THROWS(offdiag_profile_fit(empty, exps));
}

TEST_CASE("exit tail fits") {
  const double alpha = 0.5;
  std::vector<ExitTailCurve> curves;
  for (double D : {0.5, 1.0, 2.0, 4.0}) {
    ExitTailCurve c;
    c.D = D;
    for (double t : log_grid(1e-4, 10.0, 80)) {
      c.times.push_back(t);
      // synthetic law P(tau <= t) = exp(-(D^{1+1/alpha}/t)^alpha): the inner
      // slope in t^{-alpha} is D^{(1+1/alpha)alpha} = D^{1+alpha}
      c.cdf.push_back(std::exp(-std::pow(std::pow(D, 1.0 + 1.0 / alpha) / t, alpha)));
    }
    curves.push_back(std::move(c));
  }
  auto fit = exit_tail_fit(curves, alpha);
  REQUIRE(fit.inner.size() == curves.size());
  for (size_t i = 0; i < curves.size(); ++i)
    CHECK(fit.inner[i].exponent ==
          doctest::Approx(std::pow(curves[i].D, 1.0 + alpha)).epsilon(1e-9));
  CHECK(fit.outer.exponent == doctest::Approx(1.0 + alpha).epsilon(1e-6));
  CHECK(fit.outer.r_squared > 0.999999);

  // a curve whose tail never reaches small probabilities is rejected
  ExitTailCurve shallow;
  shallow.D = 1.0;
  shallow.times = {1.0, 2.0, 4.0};
  shallow.cdf = {0.3, 0.5, 0.7};
  CHECK_THROWS(exit_tail_fit({shallow}, alpha));
}
