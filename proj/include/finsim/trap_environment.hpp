#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

#include "finsim/random.hpp"
#include "finsim/space_model.hpp"

namespace finsim {

enum class NuRepresentation { increments, ppp };

struct TrapAtom {
  double depth;
  int vertex;
};

struct VolumeCurve {
  int center = 0;
  std::vector<double> radii;
  std::vector<double> values;
};

/// One realization of the FIN trap measure nu on a SpaceModel.
/// Immutable after sampling.
class TrapEnvironment {
 public:
  /// Each cell's nu-mass is an independent subordinator increment of duration
  /// equal to the cell's mu-mass.
  static TrapEnvironment sample_increments(std::shared_ptr<const SpaceModel> space, double alpha,
                                           std::uint64_t seed);

  /// Poisson atoms above a truncation threshold v_min plus a deterministic
  /// mean compensation for the sub-threshold traps; atoms recorded.
  static TrapEnvironment sample_ppp(std::shared_ptr<const SpaceModel> space, double alpha, double v_min,
                                    std::uint64_t seed);

  /// Deterministic nu == mu fixture (unit traps).
  static TrapEnvironment unit_traps(std::shared_ptr<const SpaceModel> space);

  /// Rehydrate a previously sampled environment (disk cache loads); atoms are
  /// not restored.
  static TrapEnvironment restore(std::shared_ptr<const SpaceModel> space, double alpha,
                                 std::uint64_t seed, std::vector<double> nu_mass,
                                 NuRepresentation rep);

  const SpaceModel& space() const { return *space_; }
  std::shared_ptr<const SpaceModel> space_ptr() const { return space_; }
  const std::vector<double>& nu_mass() const { return nu_mass_; }
  double nu_mass(int x) const { return nu_mass_[x]; }
  double nu_total() const { return nu_total_; }
  const std::vector<TrapAtom>& atoms() const { return atoms_; }
  double alpha() const { return alpha_; }
  std::uint64_t seed() const { return seed_; }
  NuRepresentation representation() const { return representation_; }
  double v_min() const { return v_min_; }

  /// V(x, r) = nu(B_R(x, r))
  double nu_ball_volume(int x, double r) const;
  /// V(x, r) for a batch of increasing radii, one resistance sweep.
  VolumeCurve volume_curve(int x, const std::vector<double>& radii) const;

  /// CSV rows (vertex, nu_mass) with a JSON header line.
  void write_csv(std::ostream& os) const;

 private:
  TrapEnvironment() = default;
  std::shared_ptr<const SpaceModel> space_;
  std::vector<double> nu_mass_;
  std::vector<TrapAtom> atoms_;
  double nu_total_ = 0.0;
  double alpha_ = 0.0;
  std::uint64_t seed_ = 0;
  NuRepresentation representation_ = NuRepresentation::increments;
  double v_min_ = 0.0;
};

}  // namespace finsim
