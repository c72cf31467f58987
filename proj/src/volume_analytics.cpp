#include "finsim/volume_analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace finsim {

double EnvelopeParams::v(double r) const { return v_const * std::pow(r, delta_f); }

void EnvelopeParams::validate() const {
  if (delta_f <= 0 || v_const <= 0 || beta <= 0) throw std::invalid_argument("EnvelopeParams: positive exponents required");
  if (c_l > c_u) throw std::invalid_argument("EnvelopeParams: c_l > c_u");
  if (c_d < 1.0) throw std::invalid_argument("EnvelopeParams: c_d < 1");
  if (std::abs(gamma - std::log2(c_d)) > 1e-9) throw std::invalid_argument("EnvelopeParams: gamma != log2(c_d)");
}

EnvelopeParams EnvelopeParams::for_space(const SpaceModel& space) {
  EnvelopeParams p;
  p.delta_f = space.volume_exponent();
  p.v_const = 1.0;
  p.c_d = std::pow(2.0, p.delta_f);
  p.gamma = p.delta_f;
  p.beta = space.metric_params().beta;
  p.c_l = 1.0;
  p.c_u = 1.0;
  return p;
}

const char* envelope_kind_name(EnvelopeKind k) {
  switch (k) {
    case EnvelopeKind::local_upper_log: return "local_upper_log";
    case EnvelopeKind::local_seq_upper: return "local_seq_upper";
    case EnvelopeKind::local_lower_loglog: return "local_lower_loglog";
    case EnvelopeKind::local_seq_lower: return "local_seq_lower";
    case EnvelopeKind::uniform_inf_phi: return "uniform_inf_phi";
    case EnvelopeKind::uniform_sup: return "uniform_sup";
  }
  return "?";
}

void EnvelopeReport::write_csv(std::ostream& os) const {
  os << "# {\"kind\":\"" << envelope_kind_name(kind) << "\",\"band_min\":" << band_min
     << ",\"band_max\":" << band_max << ",\"pass_fraction\":" << pass_fraction
     << ",\"pass\":" << (pass ? "true" : "false") << "}\n";
  os << "r,observed,envelope,ratio\n";
  for (size_t i = 0; i < radii.size(); ++i)
    os << radii[i] << ',' << observed[i] << ',' << envelope[i] << ',' << ratio[i] << '\n';
}

namespace {

double lattice_scale(const SpaceModel& space) {
  double s = std::numeric_limits<double>::infinity();
  for (const auto& e : space.edges()) s = std::min(s, 1.0 / e.conductance);
  return s;
}

void check_radii(const SpaceModel& space, const std::vector<double>& radii,
                 const EnvelopeParams& params, bool need_loglog) {
  if (radii.empty()) throw std::invalid_argument("empty radii");
  if (!std::is_sorted(radii.begin(), radii.end())) throw std::invalid_argument("radii must be increasing");
  const double lat = lattice_scale(space);
  if (radii.front() < lat) throw std::invalid_argument("radius below lattice scale");
  if (need_loglog && std::abs(std::log(params.v(radii.back()))) <= 1.0)
    throw std::invalid_argument("largest radius too coarse: |log v(r)| <= 1 breaks the log-log envelope");
}

// the four local correction factors applied on top of v(r)^{1/alpha}
double correction(EnvelopeKind kind, double abs_log_v, double alpha, double eps) {
  switch (kind) {
    case EnvelopeKind::local_upper_log: return std::pow(abs_log_v, (1.0 + eps) / alpha);
    case EnvelopeKind::local_seq_upper: return std::pow(abs_log_v, 1.0 / alpha);
    case EnvelopeKind::local_lower_loglog:
    case EnvelopeKind::local_seq_lower: return std::pow(std::log(abs_log_v), 1.0 - 1.0 / alpha);
    default: throw std::logic_error("not a local kind");
  }
}

}  // namespace

std::vector<EnvelopeReport> local_fluctuation_scan(const std::vector<TrapEnvironment>& envs,
                                                   int center, const std::vector<double>& radii,
                                                   const EnvelopeParams& params,
                                                   const LocalScanConfig& cfg) {
  if (envs.empty()) throw std::invalid_argument("empty ensemble");
  params.validate();
  check_radii(envs.front().space(), radii, params, /*need_loglog=*/true);
  const double alpha = envs.front().alpha() > 0 ? envs.front().alpha() : 1.0;

  const EnvelopeKind kinds[] = {EnvelopeKind::local_upper_log, EnvelopeKind::local_seq_upper,
                                EnvelopeKind::local_lower_loglog, EnvelopeKind::local_seq_lower};
  std::vector<EnvelopeReport> reports(4);
  std::vector<int> passed(4, 0);
  for (int k = 0; k < 4; ++k) {
    reports[k].kind = kinds[k];
    reports[k].radii = radii;
    reports[k].band_min = std::numeric_limits<double>::infinity();
    reports[k].band_max = 0.0;
  }

  std::vector<double> base(radii.size()), abslog(radii.size());
  for (size_t i = 0; i < radii.size(); ++i) {
    const double vr = params.v(radii[i]);
    base[i] = std::pow(vr, 1.0 / alpha);
    abslog[i] = std::abs(std::log(vr));
  }

  bool first_env = true;
  std::vector<double> ratio(radii.size());
  for (const auto& env : envs) {
    VolumeCurve curve = env.volume_curve(center, radii);
    for (int k = 0; k < 4; ++k) {
      auto& rep = reports[k];
      for (size_t i = 0; i < radii.size(); ++i) {
        const double envl = base[i] * correction(kinds[k], abslog[i], alpha, cfg.epsilon);
        ratio[i] = curve.values[i] / envl;
        rep.band_min = std::min(rep.band_min, ratio[i]);
        rep.band_max = std::max(rep.band_max, ratio[i]);
        if (first_env) {
          rep.observed.push_back(curve.values[i]);
          rep.envelope.push_back(envl);
          rep.ratio.push_back(ratio[i]);
        }
      }
      // reference constants: the largest-radius ratio self-normalizes the
      // upper check; the lower check needs the window median (the min and the
      // endpoint are both heavy-tailed, their quotient is not stable enough)
      const double ref = ratio.back();
      std::vector<double> sorted_ratio = ratio;
      std::nth_element(sorted_ratio.begin(), sorted_ratio.begin() + sorted_ratio.size() / 2,
                       sorted_ratio.end());
      const double med = sorted_ratio[sorted_ratio.size() / 2];
      const double lo = *std::min_element(ratio.begin(), ratio.end());
      const double hi = *std::max_element(ratio.begin(), ratio.end());
      bool ok = true;
      switch (kinds[k]) {
        case EnvelopeKind::local_upper_log: ok = hi <= cfg.upper_slack * ref; break;
        case EnvelopeKind::local_lower_loglog: ok = lo >= med / cfg.lower_slack; break;
        case EnvelopeKind::local_seq_upper: ok = hi >= ref; break;  // report-only kinds:
        case EnvelopeKind::local_seq_lower: ok = lo <= ref; break;  // the fitted c is attained
        default: break;
      }
      passed[k] += ok ? 1 : 0;
    }
    first_env = false;
  }
  for (int k = 0; k < 4; ++k) {
    reports[k].pass_fraction = double(passed[k]) / double(envs.size());
    reports[k].pass = reports[k].pass_fraction >= cfg.min_pass_fraction;
  }
  return reports;
}

EnvelopeReport uniform_infimum_scan(const TrapEnvironment& env, const std::vector<int>& region,
                                    const std::vector<double>& radii, const EnvelopeParams& params,
                                    double band_limit) {
  if (region.empty()) throw std::invalid_argument("empty region");
  params.validate();
  check_radii(env.space(), radii, params, /*need_loglog=*/false);
  const double alpha = env.alpha() > 0 ? env.alpha() : 1.0;

  EnvelopeReport rep;
  rep.kind = EnvelopeKind::uniform_inf_phi;
  rep.radii = radii;
  rep.observed.assign(radii.size(), std::numeric_limits<double>::infinity());
  for (int x : region) {
    VolumeCurve curve = env.volume_curve(x, radii);
    for (size_t i = 0; i < radii.size(); ++i)
      rep.observed[i] = std::min(rep.observed[i], curve.values[i]);
  }
  rep.band_min = std::numeric_limits<double>::infinity();
  rep.band_max = 0.0;
  for (size_t i = 0; i < radii.size(); ++i) {
    const double vr = params.v(radii[i]);
    const double phi = std::pow(vr, 1.0 / alpha) * std::pow(std::abs(std::log(vr)), 1.0 - 1.0 / alpha);
    rep.envelope.push_back(phi);
    rep.ratio.push_back(rep.observed[i] / phi);
    rep.band_min = std::min(rep.band_min, rep.ratio.back());
    rep.band_max = std::max(rep.band_max, rep.ratio.back());
  }
  rep.pass = rep.band_max / rep.band_min < band_limit;
  rep.pass_fraction = rep.pass ? 1.0 : 0.0;
  return rep;
}

EnvelopeReport uniform_supremum_scan(const TrapEnvironment& env, const std::vector<int>& region,
                                     const std::vector<double>& radii, const EnvelopeParams& params,
                                     double band_limit) {
  if (region.empty()) throw std::invalid_argument("empty region");
  params.validate();
  check_radii(env.space(), radii, params, /*need_loglog=*/false);

  EnvelopeReport rep;
  rep.kind = EnvelopeKind::uniform_sup;
  rep.radii = radii;
  rep.observed.assign(radii.size(), 0.0);
  std::vector<char> in_region(env.space().vertex_count(), 0);
  for (int x : region) {
    VolumeCurve curve = env.volume_curve(x, radii);
    for (size_t i = 0; i < radii.size(); ++i)
      rep.observed[i] = std::max(rep.observed[i], curve.values[i]);
    in_region.at(x) = 1;
  }

  double floor = 0.0;
  if (env.representation() == NuRepresentation::ppp) {
    for (const auto& atom : env.atoms())
      if (in_region[atom.vertex]) floor = std::max(floor, atom.depth);
  } else {
    for (int x : region) floor = std::max(floor, env.nu_mass(x));
  }

  const double total = env.nu_total();
  rep.band_min = std::numeric_limits<double>::infinity();
  rep.band_max = 0.0;
  bool bounded = true;
  for (size_t i = 0; i < radii.size(); ++i) {
    rep.envelope.push_back(total);
    rep.ratio.push_back(rep.observed[i] / total);
    rep.band_min = std::min(rep.band_min, rep.observed[i]);
    rep.band_max = std::max(rep.band_max, rep.observed[i]);
    bounded = bounded && rep.observed[i] <= total * (1 + 1e-12) && rep.observed[i] >= floor * (1 - 1e-12);
  }
  rep.pass = bounded && rep.band_max / rep.band_min < band_limit;
  rep.pass_fraction = rep.pass ? 1.0 : 0.0;
  return rep;
}

}  // namespace finsim
