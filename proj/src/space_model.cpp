#include "finsim/space_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <sstream>
#include <stdexcept>

namespace finsim {

namespace {

// BFS hop counts from x (unweighted edges).
std::vector<int> hop_distances(const std::vector<std::vector<std::pair<int, double>>>& adj, int x) {
  std::vector<int> dist(adj.size(), -1);
  std::deque<int> q{x};
  dist[x] = 0;
  while (!q.empty()) {
    int u = q.front();
    q.pop_front();
    for (auto [v, c] : adj[u]) {
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        q.push_back(v);
      }
    }
  }
  return dist;
}

}  // namespace

SpaceModel SpaceModel::path(int n_cells, double length) {
  if (n_cells < 2) throw std::invalid_argument("path: n_cells must be >= 2");
  if (!(length > 0.0)) throw std::invalid_argument("path: length must be positive");
  SpaceModel m;
  m.kind_ = SpaceKind::path;
  m.level_or_cells_ = n_cells;
  m.length_ = length;
  m.volume_exponent_ = 1.0;
  m.metric_ = {1.0, DistanceKind::euclidean};
  const int n = n_cells + 1;
  const double dx = length / n_cells;
  m.coordinates_.resize(n);
  m.cell_mass_.assign(n, dx);
  m.cell_mass_.front() = dx / 2.0;
  m.cell_mass_.back() = dx / 2.0;
  for (int i = 0; i < n; ++i) m.coordinates_[i] = {i * dx, 0.0};
  m.edges_.reserve(n_cells);
  for (int i = 0; i < n_cells; ++i) m.edges_.push_back({i, i + 1, 1.0 / dx});
  m.marked_vertex_ = n / 2;
  m.finalize();
  return m;
}

SpaceModel SpaceModel::gasket(int level) {
  if (level < 1 || level > 8) throw std::invalid_argument("gasket: level must be in [1,8]");
  SpaceModel m;
  m.kind_ = SpaceKind::gasket;
  m.level_or_cells_ = level;
  m.length_ = 1.0;
  const double beta = std::log(2.0) / std::log(5.0 / 3.0);
  const double d_f = std::log(3.0) / std::log(2.0);
  m.volume_exponent_ = beta * d_f;  // exponent of v(r) in the resistance metric
  m.metric_ = {beta, DistanceKind::geodesic};

  // Triangles by corner coordinates; vertices deduplicated on a dyadic grid.
  struct Pt {
    std::int64_t x, y;
    bool operator<(const Pt& o) const { return x < o.x || (x == o.x && y < o.y); }
  };
  const std::int64_t s = std::int64_t{1} << level;  // integer grid: corner span 2^level
  // corners (0,0), (2s,0), (s, s) in skewed integer coordinates
  std::vector<std::array<Pt, 3>> tris{{Pt{0, 0}, Pt{2 * s, 0}, Pt{s, s}}};
  for (int l = 0; l < level; ++l) {
    std::vector<std::array<Pt, 3>> next;
    next.reserve(tris.size() * 3);
    for (const auto& t : tris) {
      Pt a = t[0], b = t[1], c = t[2];
      Pt ab{(a.x + b.x) / 2, (a.y + b.y) / 2};
      Pt bc{(b.x + c.x) / 2, (b.y + c.y) / 2};
      Pt ca{(c.x + a.x) / 2, (c.y + a.y) / 2};
      next.push_back({a, ab, ca});
      next.push_back({ab, b, bc});
      next.push_back({ca, bc, c});
    }
    tris = std::move(next);
  }
  std::map<Pt, int> index;
  auto vid = [&](const Pt& p) {
    auto it = index.find(p);
    if (it != index.end()) return it->second;
    int id = static_cast<int>(index.size());
    index.emplace(p, id);
    return id;
  };
  const double conductance = std::pow(5.0 / 3.0, level);  // edge resistance (3/5)^m
  const double tri_mass = std::pow(3.0, -level);
  std::map<std::pair<int, int>, double> edge_set;
  for (const auto& t : tris) {
    int a = vid(t[0]), b = vid(t[1]), c = vid(t[2]);
    for (auto [u, v] : {std::pair{a, b}, std::pair{b, c}, std::pair{c, a}}) {
      edge_set[{std::min(u, v), std::max(u, v)}] = conductance;
    }
    int n_now = static_cast<int>(index.size());
    if (static_cast<int>(m.cell_mass_.size()) < n_now) m.cell_mass_.resize(n_now, 0.0);
    m.cell_mass_[a] += tri_mass / 3.0;
    m.cell_mass_[b] += tri_mass / 3.0;
    m.cell_mass_[c] += tri_mass / 3.0;
  }
  m.coordinates_.resize(index.size());
  for (const auto& [p, id] : index) {
    // unskew to the unit equilateral triangle
    m.coordinates_[id] = {static_cast<double>(p.x) / (2.0 * s), p.y * std::sqrt(3.0) / (2.0 * s)};
  }
  m.edges_.reserve(edge_set.size());
  for (const auto& [e, c] : edge_set) m.edges_.push_back({e.first, e.second, c});
  m.marked_vertex_ = vid(Pt{0, 0});
  m.finalize();
  return m;
}

SpaceModel SpaceModel::custom(std::vector<Edge> edges, std::vector<double> cell_mass,
                              std::vector<std::array<double, 2>> coordinates, int marked_vertex,
                              MetricParams metric) {
  SpaceModel m;
  m.kind_ = SpaceKind::custom;
  m.edges_ = std::move(edges);
  m.cell_mass_ = std::move(cell_mass);
  m.coordinates_ = std::move(coordinates);
  if (m.coordinates_.empty()) m.coordinates_.resize(m.cell_mass_.size(), {0.0, 0.0});
  m.marked_vertex_ = marked_vertex;
  m.metric_ = metric;
  m.level_or_cells_ = static_cast<int>(m.cell_mass_.size());
  m.finalize();
  return m;
}

void SpaceModel::finalize() {
  const int n = vertex_count();
  if (n < 2) throw std::invalid_argument("space: needs at least 2 vertices");
  adjacency_.assign(n, {});
  degree_.assign(n, 0.0);
  for (const auto& e : edges_) {
    if (e.u < 0 || e.u >= n || e.v < 0 || e.v >= n || e.u == e.v)
      throw std::invalid_argument("space: bad edge");
    if (!(e.conductance > 0.0)) throw std::invalid_argument("space: conductance must be positive");
    adjacency_[e.u].emplace_back(e.v, e.conductance);
    adjacency_[e.v].emplace_back(e.u, e.conductance);
    degree_[e.u] += e.conductance;
    degree_[e.v] += e.conductance;
  }
  total_mass_ = 0.0;
  for (double mass : cell_mass_) {
    if (!(mass > 0.0)) throw std::invalid_argument("space: cell mass must be positive");
    total_mass_ += mass;
  }
  auto hops = hop_distances(adjacency_, 0);
  for (int d : hops)
    if (d < 0) throw std::invalid_argument("space: graph must be connected");

  // Laplacian grounded at vertex 0 (rows/cols 1..n-1), SPD.
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(edges_.size() * 4);
  for (const auto& e : edges_) {
    if (e.u > 0) trips.emplace_back(e.u - 1, e.u - 1, e.conductance);
    if (e.v > 0) trips.emplace_back(e.v - 1, e.v - 1, e.conductance);
    if (e.u > 0 && e.v > 0) {
      trips.emplace_back(e.u - 1, e.v - 1, -e.conductance);
      trips.emplace_back(e.v - 1, e.u - 1, -e.conductance);
    }
  }
  Eigen::SparseMatrix<double> lap(n - 1, n - 1);
  lap.setFromTriplets(trips.begin(), trips.end());
  grounded_ = std::make_unique<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
  grounded_->compute(lap);
  if (grounded_->info() != Eigen::Success)
    throw std::runtime_error("space: grounded Laplacian factorization failed");
}

double SpaceModel::effective_resistance(int x, int y) const {
  const int n = vertex_count();
  if (x < 0 || x >= n || y < 0 || y >= n) throw std::out_of_range("effective_resistance: bad vertex");
  if (x == y) return 0.0;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n - 1);
  if (x > 0) b[x - 1] = 1.0;
  if (y > 0) b[y - 1] = -1.0;
  Eigen::VectorXd z = grounded_->solve(b);
  return b.dot(z);
}

const std::vector<double>& SpaceModel::grounded_diag() const {
  std::call_once(*diag_once_, [this] {
    const int n = vertex_count();
    grounded_diag_.assign(n, 0.0);  // entry 0 is the grounded vertex itself
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n - 1);
    for (int i = 1; i < n; ++i) {
      b[i - 1] = 1.0;
      Eigen::VectorXd z = grounded_->solve(b);
      grounded_diag_[i] = z[i - 1];
      b[i - 1] = 0.0;
    }
  });
  return grounded_diag_;
}

std::vector<double> SpaceModel::resistance_profile(int x) const {
  const int n = vertex_count();
  if (x < 0 || x >= n) throw std::out_of_range("resistance_profile: bad vertex");
  const auto& diag = grounded_diag();
  std::vector<double> out(n, 0.0);
  if (x == 0) {
    // R(0,y) = G_yy
    for (int y = 1; y < n; ++y) out[y] = diag[y];
    return out;
  }
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n - 1);
  b[x - 1] = 1.0;
  Eigen::VectorXd col = grounded_->solve(b);
  out[0] = diag[x];
  for (int y = 1; y < n; ++y) {
    if (y == x) continue;
    out[y] = diag[x] + diag[y] - 2.0 * col[y - 1];
  }
  return out;
}

std::vector<int> SpaceModel::resistance_ball(int x, double r) const {
  if (!(r > 0.0)) throw std::invalid_argument("resistance_ball: r must be positive");
  auto prof = resistance_profile(x);
  std::vector<int> ball;
  for (int y = 0; y < vertex_count(); ++y)
    if (prof[y] < r) ball.push_back(y);
  return ball;
}

double SpaceModel::mu_ball_mass(int x, double r) const {
  double sum = 0.0;
  for (int y : resistance_ball(x, r)) sum += cell_mass_[y];
  return sum;
}

double SpaceModel::resistance_radius() const {
  auto prof = resistance_profile(marked_vertex_);
  return *std::max_element(prof.begin(), prof.end());
}

double SpaceModel::metric_distance(int x, int y) const {
  if (metric_.d_kind == DistanceKind::euclidean) {
    double dx = coordinates_[x][0] - coordinates_[y][0];
    double dy = coordinates_[x][1] - coordinates_[y][1];
    return std::sqrt(dx * dx + dy * dy);
  }
  // graph geodesic, scaled so the gasket side has length 1
  auto hops = hop_distances(adjacency_, x);
  return hops[y] * std::pow(2.0, -static_cast<double>(level_or_cells_));
}

std::string SpaceModel::to_json_spec() const {
  std::ostringstream os;
  const char* k = kind_ == SpaceKind::path ? "path" : (kind_ == SpaceKind::gasket ? "gasket" : "custom");
  os << "{\"kind\":\"" << k << "\",\"level_or_cells\":" << level_or_cells_ << ",\"length\":" << length_
     << "}";
  return os.str();
}

}  // namespace finsim
