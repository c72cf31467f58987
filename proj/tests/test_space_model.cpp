#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "finsim/space_model.hpp"

using namespace finsim;

namespace {

// Independent oracle: effective resistance from the dense Laplacian
// pseudo-inverse, R(x,y) = G+xx + G+yy - 2 G+xy.
double resistance_pseudo_inverse(const SpaceModel& sp, int x, int y) {
  const int n = sp.vertex_count();
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : sp.edges()) {
    L(e.u, e.u) += e.conductance;
    L(e.v, e.v) += e.conductance;
    L(e.u, e.v) -= e.conductance;
    L(e.v, e.u) -= e.conductance;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L);
  Eigen::MatrixXd pinv = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    if (es.eigenvalues()[k] > 1e-10)
      pinv += es.eigenvectors().col(k) * es.eigenvectors().col(k).transpose() / es.eigenvalues()[k];
  }
  return pinv(x, x) + pinv(y, y) - 2.0 * pinv(x, y);
}

SpaceModel unit_triangle() {
  return SpaceModel::custom({{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}},
                            {1.0 / 3, 1.0 / 3, 1.0 / 3}, {{0, 0}, {1, 0}, {0.5, 1}}, 0);
}

}  // namespace

TEST_CASE("path construction arithmetic") {
  auto sp = SpaceModel::path(4, 1.0);
  CHECK(sp.vertex_count() == 5);
  CHECK(sp.effective_resistance(0, 4) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sp.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sp.effective_resistance(0, 2) == doctest::Approx(0.5).epsilon(1e-12));  // series law
  CHECK(sp.marked_vertex() == 2);

  auto sp2 = SpaceModel::path(2, 2.0);
  REQUIRE(sp2.vertex_count() == 3);
  for (const auto& e : sp2.edges()) CHECK(e.conductance == doctest::Approx(1.0));  // resistance 1
  CHECK(sp2.cell_mass()[0] == doctest::Approx(0.5));
  CHECK(sp2.cell_mass()[1] == doctest::Approx(1.0));
  CHECK(sp2.cell_mass()[2] == doctest::Approx(0.5));
}

TEST_CASE("path resistance equals coordinate distance") {
  auto sp = SpaceModel::path(1000, 1.0);
  CHECK(std::abs(sp.effective_resistance(0, 500) - 0.5) < 1e-10);
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> pick(0, sp.vertex_count() - 1);
  for (int i = 0; i < 50; ++i) {
    const int x = pick(rng), y = pick(rng);
    const double d = std::abs(sp.coordinates()[x][0] - sp.coordinates()[y][0]);
    CHECK(std::abs(sp.effective_resistance(x, y) - d) <= 1e-10 * std::max(1.0, d));
  }
}

TEST_CASE("gasket construction counts and masses") {
  auto g1 = SpaceModel::gasket(1);
  CHECK(g1.vertex_count() == 6);
  CHECK(g1.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
  for (double m : g1.cell_mass()) {
    const double unit = (1.0 / 3.0) / 3.0;  // one small triangle split three ways
    CHECK(std::abs(m / unit - std::round(m / unit)) < 1e-12);
  }
  CHECK(SpaceModel::gasket(3).vertex_count() == 42);  // 3(27+1)/2
  CHECK_THROWS(SpaceModel::gasket(0));
  CHECK_THROWS(SpaceModel::gasket(9));
}

TEST_CASE("triangle fixture resistance 2/3 and pseudo-inverse oracle") {
  auto tri = unit_triangle();
  CHECK(tri.effective_resistance(0, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(tri.effective_resistance(1, 2) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(tri.effective_resistance(0, 1) ==
        doctest::Approx(resistance_pseudo_inverse(tri, 0, 1)).epsilon(1e-10));
}

TEST_CASE("gasket resistance vs pseudo-inverse oracle; corner fixed point") {
  for (int level : {1, 2}) {
    auto g = SpaceModel::gasket(level);
    // corners: vertex 0 is the marked corner; find the other two as the
    // farthest coordinate extremes
    int c1 = -1, c2 = -1;
    for (int v = 0; v < g.vertex_count(); ++v) {
      const auto& p = g.coordinates()[v];
      if (std::abs(p[0] - 1.0) < 1e-12 && std::abs(p[1]) < 1e-12) c1 = v;
      if (std::abs(p[0] - 0.5) < 1e-12 && p[1] > 0.5) c2 = v;
    }
    REQUIRE(c1 >= 0);
    REQUIRE(c2 >= 0);
    const double r = g.effective_resistance(g.marked_vertex(), c1);
    CHECK(r == doctest::Approx(resistance_pseudo_inverse(g, g.marked_vertex(), c1)).epsilon(1e-9));
    // with edge resistance (3/5)^m the corner-to-corner value is the exact
    // decimation fixed point 2/3 at every level
    CHECK(r == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    CHECK(g.effective_resistance(g.marked_vertex(), c2) == doctest::Approx(r).epsilon(1e-9));
    CHECK(g.effective_resistance(c1, g.marked_vertex()) == doctest::Approx(r).epsilon(1e-12));
  }
}

TEST_CASE("resistance triangle inequality on random triples") {
  auto p = SpaceModel::path(50, 1.0);
  auto g = SpaceModel::gasket(3);
  std::mt19937_64 rng(5);
  for (const SpaceModel* sp : {&p, &g}) {
    std::uniform_int_distribution<int> pick(0, sp->vertex_count() - 1);
    for (int i = 0; i < 100; ++i) {
      const int x = pick(rng), y = pick(rng), z = pick(rng);
      CHECK(sp->effective_resistance(x, z) <=
            sp->effective_resistance(x, y) + sp->effective_resistance(y, z) + 1e-10);
    }
  }
}

TEST_CASE("resistance balls") {
  auto sp = SpaceModel::path(10, 1.0);
  auto ball = sp.resistance_ball(5, 0.15);
  std::sort(ball.begin(), ball.end());
  CHECK(ball == std::vector<int>{4, 5, 6});
  CHECK(sp.resistance_ball(5, 0.05) == std::vector<int>{5});  // below lattice spacing 0.1

  auto g = SpaceModel::gasket(3);
  const double r = 0.5 * g.resistance_radius();
  auto gball = g.resistance_ball(g.marked_vertex(), r);
  // brute-force all-pairs oracle
  std::vector<int> brute;
  for (int y = 0; y < g.vertex_count(); ++y)
    if (g.effective_resistance(g.marked_vertex(), y) < r) brute.push_back(y);
  std::sort(gball.begin(), gball.end());
  CHECK(gball == brute);

  // monotone in r
  auto small = sp.resistance_ball(3, 0.1), big = sp.resistance_ball(3, 0.3);
  for (int v : small) CHECK(std::find(big.begin(), big.end(), v) != big.end());
}

TEST_CASE("mu ball mass") {
  auto sp = SpaceModel::path(1000, 1.0);
  CHECK(std::abs(sp.mu_ball_mass(500, 0.25) - 0.5) <= 2.0 / 1000);
  CHECK(sp.mu_ball_mass(500, 10.0) == doctest::Approx(sp.total_mass()).epsilon(1e-12));
}

TEST_CASE("gasket UVD sanity: mass ratios bounded on a dyadic grid") {
  auto g = SpaceModel::gasket(4);
  const double df = std::log(3.0) / std::log(2.0);
  double worst = 0.0;
  for (double r = 0.5; r >= 0.05; r /= 2.0) {
    double lo = 1e300, hi = 0.0;
    for (int x = 0; x < g.vertex_count(); ++x) {
      const double m = g.mu_ball_mass(x, r);
      lo = std::min(lo, m);
      hi = std::max(hi, m);
    }
    worst = std::max(worst, hi / lo);
    // fitted-constant record for v(r) = r^{ln3/ln2}: ratios stay positive/finite
    CHECK(lo / std::pow(r, df) > 0.0);
  }
  CHECK(worst < 50.0);
}

TEST_CASE("gasket metric and serialization") {
  auto g = SpaceModel::gasket(2);
  // corner-to-corner geodesic = 2^m hops of length 2^{-m}
  int far_corner = -1;
  for (int v = 0; v < g.vertex_count(); ++v)
    if (std::abs(g.coordinates()[v][0] - 1.0) < 1e-12 && std::abs(g.coordinates()[v][1]) < 1e-12)
      far_corner = v;
  CHECK(g.metric_distance(g.marked_vertex(), far_corner) == doctest::Approx(1.0));
  CHECK(g.to_json_spec().find("gasket") != std::string::npos);
  CHECK(SpaceModel::path(8, 1.0).to_json_spec().find("path") != std::string::npos);
}

TEST_CASE("path model input validation") {
  CHECK_THROWS(SpaceModel::path(1, 1.0));
  CHECK_THROWS(SpaceModel::path(8, -1.0));
  // disconnected custom graph rejected
  CHECK_THROWS(SpaceModel::custom({{0, 1, 1.0}}, {1, 1, 1}, {{0, 0}, {1, 0}, {2, 0}}, 0));
}
