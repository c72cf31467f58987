#pragma once

#include <Eigen/Sparse>
#include <array>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace finsim {

enum class SpaceKind { path, gasket, custom };
enum class DistanceKind { geodesic, euclidean };

struct MetricParams {
  double beta = 1.0;
  DistanceKind d_kind = DistanceKind::euclidean;
};

struct Edge {
  int u;
  int v;
  double conductance;
};

/// Weighted-graph approximation of a resistance space (F, R, mu, rho).
///
/// Immutable after construction; all queries are const and safe for concurrent
/// use. Effective resistances are computed exactly from the graph Laplacian
/// grounded at vertex 0 (one sparse factorization, cached at construction).
class SpaceModel {
 public:
  static SpaceModel path(int n_cells, double length);
  static SpaceModel gasket(int level);

  /// Arbitrary graph, mostly for test fixtures.
  static SpaceModel custom(std::vector<Edge> edges, std::vector<double> cell_mass,
                           std::vector<std::array<double, 2>> coordinates, int marked_vertex,
                           MetricParams metric = {});

  int vertex_count() const { return static_cast<int>(cell_mass_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<std::array<double, 2>>& coordinates() const { return coordinates_; }
  const std::vector<double>& cell_mass() const { return cell_mass_; }
  double total_mass() const { return total_mass_; }
  int marked_vertex() const { return marked_vertex_; }
  const MetricParams& metric_params() const { return metric_; }
  SpaceKind kind() const { return kind_; }
  int level_or_cells() const { return level_or_cells_; }
  double length() const { return length_; }

  /// Volume exponent of v(r) in the resistance metric (delta_f for the path,
  /// beta*d_f for the gasket).
  double volume_exponent() const { return volume_exponent_; }

  /// neighbours of x as (vertex, conductance) pairs
  const std::vector<std::pair<int, double>>& neighbours(int x) const { return adjacency_[x]; }
  /// total conductance at x
  double degree(int x) const { return degree_[x]; }

  /// R(x,y) = 1/min{E(f,f): f(x)=1, f(y)=0}, exact linear solve. R(x,x) = 0.
  double effective_resistance(int x, int y) const;
  /// R(x,y) for every y, one column solve against the cached factorization.
  std::vector<double> resistance_profile(int x) const;
  /// {y : R(x,y) < r}; always contains x.
  std::vector<int> resistance_ball(int x, double r) const;
  /// mu(B_R(x,r))
  double mu_ball_mass(int x, double r) const;
  /// sup_y R(x0, y) from the marked vertex; lower bound on the R-diameter,
  /// exact for the path and tight for the gasket corners.
  double resistance_radius() const;

  /// distance in the comparison metric d (euclidean for path, scaled geodesic
  /// for the gasket)
  double metric_distance(int x, int y) const;

  /// Serialized spec {kind, level_or_cells, length}.
  std::string to_json_spec() const;

  SpaceModel(const SpaceModel&) = delete;
  SpaceModel& operator=(const SpaceModel&) = delete;
  SpaceModel(SpaceModel&&) = default;

 private:
  SpaceModel() = default;
  void finalize();  // validates, builds adjacency and the grounded factorization
  const std::vector<double>& grounded_diag() const;

  SpaceKind kind_ = SpaceKind::custom;
  int level_or_cells_ = 0;
  double length_ = 0.0;
  double volume_exponent_ = 1.0;
  int marked_vertex_ = 0;
  MetricParams metric_;
  std::vector<Edge> edges_;
  std::vector<double> cell_mass_;
  std::vector<std::array<double, 2>> coordinates_;
  std::vector<std::vector<std::pair<int, double>>> adjacency_;
  std::vector<double> degree_;
  double total_mass_ = 0.0;

  // Laplacian grounded at vertex 0, factorized once.
  std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> grounded_;
  mutable std::vector<double> grounded_diag_;  // diag of the grounded inverse, lazy
  mutable std::unique_ptr<std::once_flag> diag_once_ = std::make_unique<std::once_flag>();
};

}  // namespace finsim
