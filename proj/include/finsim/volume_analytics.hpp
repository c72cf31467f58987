#pragma once

#include <iosfwd>
#include <vector>

#include "finsim/trap_environment.hpp"

namespace finsim {

/// Deterministic volume profile of mu in the resistance metric,
/// v(r) = v_const * r^delta_f, plus doubling constants.
struct EnvelopeParams {
  double delta_f = 1.0;
  double v_const = 1.0;
  double c_l = 1.0;
  double c_u = 1.0;
  double c_d = 2.0;
  double gamma = 1.0;  // = log2(c_d)
  double beta = 1.0;

  double v(double r) const;
  void validate() const;
  static EnvelopeParams for_space(const SpaceModel& space);
};

enum class EnvelopeKind {
  local_upper_log,     // V <= c v^{1/a} |log v|^{(1+eps)/a}, all r
  local_seq_upper,     // V >= c v^{1/a} |log v|^{1/a} along some radii
  local_lower_loglog,  // V >= c v^{1/a} (log|log v|)^{1-1/a}, all r
  local_seq_lower,     // V <= c v^{1/a} (log|log v|)^{1-1/a} along some radii
  uniform_inf_phi,     // inf over a region vs phi(r) = v^{1/a}|log v|^{1-1/a}
  uniform_sup,         // sup over a region, bounded by total mass / largest atom
};

const char* envelope_kind_name(EnvelopeKind k);

struct EnvelopeReport {
  EnvelopeKind kind = EnvelopeKind::local_upper_log;
  std::vector<double> radii;
  std::vector<double> observed;  // representative environment for ensemble scans
  std::vector<double> envelope;
  std::vector<double> ratio;     // observed / envelope
  double band_min = 0.0;         // over the whole scan (all envs for ensembles)
  double band_max = 0.0;
  double pass_fraction = 1.0;    // fraction of environments inside the band
  bool pass = true;

  /// rows (r, observed, envelope, ratio)
  void write_csv(std::ostream& os) const;
};

struct LocalScanConfig {
  double epsilon = 0.5;        // exponent slack of the all-r upper envelope
  double upper_slack = 30.0;   // band: ratio(r) <= slack * ratio(r_max)
  double lower_slack = 250.0;  // band: ratio(r) >= median ratio / slack
  double min_pass_fraction = 0.9;
};

/// Per-environment ratio series V(center, r) / envelope for the four local
/// envelope kinds; the band constant is fitted per environment (largest-radius
/// ratio for the upper check, window median for the lower check), and
/// pass_fraction counts environments staying inside.
std::vector<EnvelopeReport> local_fluctuation_scan(const std::vector<TrapEnvironment>& envs,
                                                   int center, const std::vector<double>& radii,
                                                   const EnvelopeParams& params,
                                                   const LocalScanConfig& cfg = {});

/// inf over the region of V(x,r), divided by phi(r) = v^{1/a}|log v|^{1-1/a};
/// passes when band_max/band_min < band_limit.
EnvelopeReport uniform_infimum_scan(const TrapEnvironment& env, const std::vector<int>& region,
                                    const std::vector<double>& radii, const EnvelopeParams& params,
                                    double band_limit = 20.0);

/// sup over the region of V(x,r), normalized by the total nu mass; asserts the
/// series is <= nu(F) and >= the largest atom depth in the region (largest
/// vertex mass for non-atomic representations).
EnvelopeReport uniform_supremum_scan(const TrapEnvironment& env, const std::vector<int>& region,
                                     const std::vector<double>& radii, const EnvelopeParams& params,
                                     double band_limit = 10.0);

}  // namespace finsim
