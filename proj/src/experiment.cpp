#include "finsim/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "finsim/stable_law.hpp"
#include "finsim/walker.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace finsim {

std::uint64_t fnv1a_hash(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::shared_ptr<const SpaceModel> SpaceSpec::build() const {
  if (kind == "path") return std::make_shared<SpaceModel>(SpaceModel::path(n_cells, length));
  if (kind == "gasket") return std::make_shared<SpaceModel>(SpaceModel::gasket(level));
  throw std::invalid_argument("unknown space kind: " + kind);
}

std::string SpaceSpec::cache_key() const {
  std::ostringstream os;
  if (kind == "path")
    os << "path" << n_cells << "_L" << length;
  else
    os << kind << level;
  return os.str();
}

namespace {

std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) throw std::invalid_argument("log grid: need 0 < lo < hi, n >= 2");
  std::vector<double> g(n);
  const double step = std::log(hi / lo) / (n - 1);
  for (int i = 0; i < n; ++i) g[i] = lo * std::exp(step * i);
  g.back() = hi;
  return g;
}

template <class F>
void parallel_for(int n, int workers, F f) {
  if (workers <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto body = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!err) err = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < std::min(workers, n); ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

double get_number(const json& j, const std::string& key) {
  if (!j.is_number()) throw std::invalid_argument("config key '" + key + "': expected a number");
  return j.get<double>();
}

int get_int(const json& j, const std::string& key) {
  if (!j.is_number_integer()) throw std::invalid_argument("config key '" + key + "': expected an integer");
  return j.get<int>();
}

std::string get_string(const json& j, const std::string& key) {
  if (!j.is_string()) throw std::invalid_argument("config key '" + key + "': expected a string");
  return j.get<std::string>();
}

SpaceSpec parse_space(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config key 'space': expected an object");
  SpaceSpec s;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k == "kind") s.kind = get_string(*it, "space.kind");
    else if (k == "n_cells") s.n_cells = get_int(*it, "space.n_cells");
    else if (k == "length") s.length = get_number(*it, "space.length");
    else if (k == "level") s.level = get_int(*it, "space.level");
    else throw std::invalid_argument("unknown config key: space." + k);
  }
  if (s.kind != "path" && s.kind != "gasket") throw std::invalid_argument("space.kind must be path or gasket");
  return s;
}

}  // namespace

std::vector<double> ExperimentConfig::time_grid() const { return log_grid(t_min, t_max, t_points); }
std::vector<double> ExperimentConfig::radius_grid() const { return log_grid(r_min, r_max, r_points); }

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config parse error: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  ExperimentConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k == "experiment") c.experiment = get_string(*it, k);
    else if (k == "space") c.space = parse_space(*it);
    else if (k == "alpha") c.alpha = get_number(*it, k);
    else if (k == "ensemble") c.ensemble = get_int(*it, k);
    else if (k == "seed") { c.seed = it->get<std::uint64_t>(); c.seed_set = true; }
    else if (k == "t_min") c.t_min = get_number(*it, k);
    else if (k == "t_max") c.t_max = get_number(*it, k);
    else if (k == "t_points") c.t_points = get_int(*it, k);
    else if (k == "r_min") c.r_min = get_number(*it, k);
    else if (k == "r_max") c.r_max = get_number(*it, k);
    else if (k == "r_points") c.r_points = get_int(*it, k);
    else if (k == "fit_lo") c.fit_lo = get_number(*it, k);
    else if (k == "fit_hi") c.fit_hi = get_number(*it, k);
    else if (k == "distances") c.distances = it->get<std::vector<double>>();
    else if (k == "samples") c.samples = get_int(*it, k);
    else if (k == "lattice_n") c.lattice_n = get_int(*it, k);
    else if (k == "epsilon") c.epsilon = get_number(*it, k);
    else if (k == "workers") c.workers = get_int(*it, k);
    else if (k == "out_dir") c.out_dir = get_string(*it, k);
    else if (k == "input_dir") c.input_dir = get_string(*it, k);
    else throw std::invalid_argument("unknown config key: " + k);
  }
  static const char* kinds[] = {"exponents", "volume", "subordinator", "heatkernel", "exit", "report"};
  bool known = false;
  for (const char* e : kinds) known = known || c.experiment == e;
  if (!known) throw std::invalid_argument("config key 'experiment' must name a known experiment");
  if (c.experiment != "report") {
    if (!c.seed_set) throw std::invalid_argument("config key 'seed' is mandatory");
    if (!(c.alpha > 0.0 && c.alpha < 1.0))
      throw std::invalid_argument("config key 'alpha' out of range: must be in (0,1)");
  }
  if (c.ensemble < 1) throw std::invalid_argument("config key 'ensemble' must be >= 1");
  if (c.workers < 1) throw std::invalid_argument("config key 'workers' must be >= 1");
  return c;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

namespace {

json config_echo(const ExperimentConfig& c) {
  json j;
  j["experiment"] = c.experiment;
  j["space"] = {{"kind", c.space.kind}, {"n_cells", c.space.n_cells}, {"length", c.space.length},
                {"level", c.space.level}};
  j["alpha"] = c.alpha;
  j["ensemble"] = c.ensemble;
  j["seed"] = c.seed;
  j["t_min"] = c.t_min;
  j["t_max"] = c.t_max;
  j["t_points"] = c.t_points;
  j["r_min"] = c.r_min;
  j["r_max"] = c.r_max;
  j["r_points"] = c.r_points;
  j["fit_lo"] = c.fit_lo;
  j["fit_hi"] = c.fit_hi;
  j["distances"] = c.distances;
  j["samples"] = c.samples;
  j["lattice_n"] = c.lattice_n;
  j["epsilon"] = c.epsilon;
  j["workers"] = c.workers;
  j["out_dir"] = c.out_dir;
  j["input_dir"] = c.input_dir;
  return j;
}

struct RunSink {
  fs::path dir;
  json files = json::object();
  void emit(const std::string& name, const std::string& content) {
    std::ofstream out(dir / name, std::ios::binary);
    out << content;
    if (!out) throw std::runtime_error("failed writing " + (dir / name).string());
    std::ostringstream hex;
    hex << std::hex << fnv1a_hash(content);
    files[name] = hex.str();
  }
};

std::string fit_csv_row(const std::string& name, const FitResult& f) {
  std::ostringstream os;
  os.precision(17);
  os << name << ',' << f.exponent << ',' << f.stderr_ << ',' << f.ci_lo << ',' << f.ci_hi << ','
     << f.r_squared << ',' << f.window_lo << ',' << f.window_hi << ',' << f.n_points << '\n';
  return os.str();
}

constexpr const char* kFitHeader = "name,exponent,stderr,ci_lo,ci_hi,r2,window_lo,window_hi,n_points\n";

ExponentSet space_exponents(const SpaceModel& sp, double alpha) {
  const double beta = sp.metric_params().beta;
  const double d_f = sp.volume_exponent() / beta;
  return exponent_set(alpha, beta, d_f);
}

// nearest vertex to the requested comparison-metric distance from the mark
int vertex_at_distance(const SpaceModel& sp, double d) {
  const int m = sp.marked_vertex();
  int best = m;
  double err = std::numeric_limits<double>::infinity();
  for (int x = 0; x < sp.vertex_count(); ++x) {
    const double e = std::abs(sp.metric_distance(m, x) - d);
    if (e < err) { err = e; best = x; }
  }
  return best;
}

std::vector<int> metric_ball(const SpaceModel& sp, int center, double d) {
  std::vector<int> out;
  for (int x = 0; x < sp.vertex_count(); ++x)
    if (sp.metric_distance(center, x) < d) out.push_back(x);
  return out;
}

void run_exponents(const ExperimentConfig& cfg, RunSink& sink) {
  auto sp = cfg.space.build();
  const ExponentSet e = space_exponents(*sp, cfg.alpha);
  std::ostringstream os;
  os.precision(17);
  os << "alpha,beta,d_f,d_w,d_s,gamma,q,alpha_c\n"
     << e.alpha << ',' << e.beta << ',' << e.d_f << ',' << e.d_w << ',' << e.d_s << ',' << e.gamma
     << ',' << e.q << ',' << e.alpha_c << '\n';
  sink.emit("exponents.csv", os.str());
}

void run_subordinator(const ExperimentConfig& cfg, RunSink& sink) {
  StableLaw law(cfg.alpha);
  const int n = cfg.samples;
  std::vector<double> xs(n);
  const int chunk = 4096;
  const int tasks = (n + chunk - 1) / chunk;
  parallel_for(tasks, cfg.workers, [&](int t) {
    RngStream rng = make_stream(derive_seed(cfg.seed, t));
    for (int i = t * chunk; i < std::min(n, (t + 1) * chunk); ++i)
      xs[i] = law.sample_standard(rng);  // standard normalization E exp(-l S^a)=exp(-l^a)
  });
  std::sort(xs.begin(), xs.end());
  auto grid = log_grid(0.005, 100.0, 240);
  std::ostringstream os;
  os.precision(17);
  os << "x,cdf\n";
  std::vector<double> fit_x, fit_y;
  for (double x : grid) {
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const double cdf = double(it - xs.begin()) / n;
    os << x << ',' << cdf << '\n';
    if (x >= 0.05 && x <= 0.3 && cdf > 0.0) {
      const double w = std::pow(x, -cfg.alpha / (1.0 - cfg.alpha));
      fit_x.push_back(w);
      // subtract the universal (1/2) log w subleading term of the small-ball
      // law so the linear slope estimates the rate constant without bias
      fit_y.push_back(-std::log(cdf) - 0.5 * std::log(w));
    }
  }
  sink.emit("subordinator_cdf.csv", os.str());
  std::ostringstream fits;
  fits.precision(17);
  fits << kFitHeader;
  if (fit_x.size() >= 3) fits << fit_csv_row("smallball_rate", linear_fit(fit_x, fit_y));
  FitResult expected;
  expected.exponent = StableLaw::small_ball_rate(cfg.alpha);
  expected.ci_lo = expected.ci_hi = expected.exponent;
  fits << fit_csv_row("smallball_rate_expected", expected);
  sink.emit("subordinator_fits.csv", fits.str());
}

void run_volume(const ExperimentConfig& cfg, RunSink& sink, const std::string& cache_dir) {
  auto sp = cfg.space.build();
  auto envs = load_or_sample_ensemble(cfg.space, cfg.alpha, cfg.seed, cfg.ensemble, cache_dir);
  double r_max = cfg.r_max, r_min = cfg.r_min;
  if (r_max <= 0.0) r_max = sp->resistance_radius() / 4.0;
  if (r_min <= 0.0) r_min = r_max / 100.0;
  const auto radii = log_grid(r_min, r_max, cfg.r_points);
  LocalScanConfig lsc;
  lsc.epsilon = cfg.epsilon;
  const auto params = EnvelopeParams::for_space(*sp);
  auto reports = local_fluctuation_scan(envs, sp->marked_vertex(), radii, params, lsc);
  for (const auto& rep : reports) {
    std::ostringstream os;
    os.precision(17);
    rep.write_csv(os);
    sink.emit(std::string("volume_") + envelope_kind_name(rep.kind) + ".csv", os.str());
  }
  std::vector<int> region;
  const int nv = sp->vertex_count();
  if (cfg.space.kind == "path")
    for (int x = nv / 4; x < 3 * nv / 4; ++x) region.push_back(x);
  else
    for (int x = 0; x < nv; ++x) region.push_back(x);
  for (bool sup : {false, true}) {
    const auto rep = sup ? uniform_supremum_scan(envs.front(), region, radii, params)
                         : uniform_infimum_scan(envs.front(), region, radii, params);
    std::ostringstream os;
    os.precision(17);
    rep.write_csv(os);
    sink.emit(std::string("volume_") + envelope_kind_name(rep.kind) + ".csv", os.str());
  }
}

void run_heatkernel(const ExperimentConfig& cfg, RunSink& sink, const std::string& cache_dir) {
  auto sp = cfg.space.build();
  const int mark = sp->marked_vertex();
  auto envs = load_or_sample_ensemble(cfg.space, cfg.alpha, cfg.seed, cfg.ensemble, cache_dir);
  const auto times = cfg.time_grid();
  std::vector<double> dists = cfg.distances;
  if (dists.empty()) {
    double dmax = 0.0;
    for (int x = 0; x < sp->vertex_count(); ++x) dmax = std::max(dmax, sp->metric_distance(mark, x));
    dists = log_grid(dmax / 32.0, dmax / 2.0, 6);
  }
  std::vector<int> probes;
  for (double d : dists) probes.push_back(vertex_at_distance(*sp, d));

  const int ne = static_cast<int>(envs.size());
  std::vector<std::vector<double>> diag(ne), off(ne);  // off: flattened (time-major per probe)
  std::vector<CorrectionReport> bands(ne);
  std::vector<char> has_band(ne, 0);
  const auto params = EnvelopeParams::for_space(*sp);
  parallel_for(ne, cfg.workers, [&](int e) {
    Generator gen(envs[e].space_ptr(), std::make_shared<TrapEnvironment>(envs[e]));
    diag[e].reserve(times.size());
    for (double t : times) diag[e].push_back(gen.heat_kernel_entry(t, mark, mark));
    for (int p : probes)
      for (double t : times) off[e].push_back(gen.heat_kernel_entry(t, mark, p));
    try {
      bands[e] = quenched_correction_fit(times, diag[e], params, cfg.alpha);
      has_band[e] = 1;
    } catch (const std::exception&) {
      // time grid outside the corrected-scale range; bands skipped for this env
    }
  });

  std::ostringstream curves;
  curves.precision(17);
  curves << "env,t,p_diag";
  for (double d : dists) curves << ",p_off_" << d;
  curves << '\n';
  for (int e = 0; e < ne; ++e)
    for (size_t ti = 0; ti < times.size(); ++ti) {
      curves << e << ',' << times[ti] << ',' << diag[e][ti];
      for (size_t p = 0; p < probes.size(); ++p) curves << ',' << off[e][p * times.size() + ti];
      curves << '\n';
    }
  sink.emit("heatkernel_curves.csv", curves.str());

  // annealed means (raw + trimmed top 1%) and offdiagonal means
  const int trim = std::max(1, int(std::ceil(0.01 * ne)));
  std::ostringstream ann;
  ann.precision(17);
  ann << "t,mean_diag,trimmed_diag,ci_lo,ci_hi";
  for (double d : dists) ann << ",mean_off_" << d;
  ann << '\n';
  std::vector<double> mean_diag(times.size());
  std::vector<std::vector<double>> mean_off(probes.size(), std::vector<double>(times.size()));
  std::vector<double> vals(ne);
  for (size_t ti = 0; ti < times.size(); ++ti) {
    double s = 0.0;
    for (int e = 0; e < ne; ++e) { vals[e] = diag[e][ti]; s += vals[e]; }
    const double mean = s / ne;
    mean_diag[ti] = mean;
    double var = 0.0;
    for (int e = 0; e < ne; ++e) var += (vals[e] - mean) * (vals[e] - mean);
    var = ne > 1 ? var / (ne - 1) : 0.0;
    const double half = 1.96 * std::sqrt(var / ne);
    std::nth_element(vals.begin(), vals.end() - trim, vals.end());
    double ts = 0.0;
    for (int e = 0; e < ne - trim; ++e) ts += vals[e];
    ann << times[ti] << ',' << mean << ',' << (ne > trim ? ts / (ne - trim) : mean) << ','
        << mean - half << ',' << mean + half;
    for (size_t p = 0; p < probes.size(); ++p) {
      double so = 0.0;
      for (int e = 0; e < ne; ++e) so += off[e][p * times.size() + ti];
      mean_off[p][ti] = so / ne;
      ann << ',' << mean_off[p][ti];
    }
    ann << '\n';
  }
  sink.emit("heatkernel_annealed.csv", ann.str());

  std::ostringstream fits;
  fits.precision(17);
  fits << kFitHeader;
  const double wlo = cfg.fit_lo > 0 ? cfg.fit_lo : times.front();
  const double whi = cfg.fit_hi > 0 ? cfg.fit_hi : times.back();
  fits << fit_csv_row("annealed_diag_slope", fit_power_law(times, mean_diag, wlo, whi));
  const ExponentSet exps = space_exponents(*sp, cfg.alpha);
  FitResult ref;
  ref.exponent = -exps.d_s / 2.0;
  ref.ci_lo = ref.ci_hi = ref.exponent;
  fits << fit_csv_row("annealed_diag_reference", ref);
  OffdiagData od;
  for (size_t p = 0; p < probes.size(); ++p) {
    const double d = sp->metric_distance(mark, probes[p]);
    for (size_t ti = 0; ti < times.size(); ++ti) {
      od.times.push_back(times[ti]);
      od.dist.push_back(d);
      od.ratio.push_back(mean_off[p][ti] / mean_diag[ti]);
    }
  }
  try {
    const OffdiagFit of = offdiag_profile_fit(od, exps);
    fits << fit_csv_row("offdiag_stretch_free", of.stretch_free);
    fits << fit_csv_row("offdiag_fixed_linear", of.fixed);
    FitResult sref;
    sref.exponent = 1.0 / (exps.d_w - 1.0);
    sref.ci_lo = sref.ci_hi = sref.exponent;
    fits << fit_csv_row("offdiag_stretch_reference", sref);
  } catch (const std::exception&) {
    // probe grid without a usable off-diagonal regime; fits skipped
  }
  sink.emit("heatkernel_fits.csv", fits.str());

  std::ostringstream bs;
  bs.precision(17);
  bs << "env,band_h_min,band_h_max,band_hl_min,band_hl_max,band_hll_min,band_hll_max\n";
  for (int e = 0; e < ne; ++e) {
    if (!has_band[e]) continue;
    bs << e << ',' << bands[e].band_h.min << ',' << bands[e].band_h.max << ','
       << bands[e].band_hl.min << ',' << bands[e].band_hl.max << ',' << bands[e].band_hll.min
       << ',' << bands[e].band_hll.max << '\n';
  }
  sink.emit("heatkernel_bands.csv", bs.str());
}

void run_exit(const ExperimentConfig& cfg, RunSink& sink, const std::string& cache_dir) {
  auto sp = cfg.space.build();
  const int mark = sp->marked_vertex();
  auto envs = load_or_sample_ensemble(cfg.space, cfg.alpha, cfg.seed, cfg.ensemble, cache_dir);
  std::vector<double> Ds = cfg.distances;
  if (Ds.empty()) Ds = {0.5, 1.0, 2.0};
  const auto times = cfg.time_grid();
  const int ne = static_cast<int>(envs.size());
  std::vector<std::vector<ExitTailCurve>> curves(ne);
  parallel_for(ne, cfg.workers, [&](int e) {
    Generator gen(envs[e].space_ptr(), std::make_shared<TrapEnvironment>(envs[e]));
    for (double D : Ds) {
      auto dom = metric_ball(*sp, mark, D);
      if (static_cast<int>(dom.size()) == sp->vertex_count())
        throw std::invalid_argument("exit: D covers the whole space, no exit possible");
      KilledOperator killed(gen, dom);
      ExitTailCurve c;
      c.D = D;
      c.times = times;
      c.cdf = killed.exit_cdf_curve(mark, times);
      curves[e].push_back(std::move(c));
    }
  });
  std::ostringstream os;
  os.precision(17);
  os << "env,D,t,cdf\n";
  for (int e = 0; e < ne; ++e)
    for (const auto& c : curves[e])
      for (size_t i = 0; i < times.size(); ++i)
        os << e << ',' << c.D << ',' << c.times[i] << ',' << c.cdf[i] << '\n';
  sink.emit("exit_curves.csv", os.str());

  std::ostringstream fits;
  fits.precision(17);
  fits << "env,D,inner_slope,inner_r2,outer_exponent,outer_ci_lo,outer_ci_hi\n";
  for (int e = 0; e < ne; ++e) {
    const ExitTailFit f = exit_tail_fit(curves[e], cfg.alpha);
    for (size_t i = 0; i < f.Ds.size(); ++i)
      fits << e << ',' << f.Ds[i] << ',' << f.inner[i].exponent << ',' << f.inner[i].r_squared
           << ',' << f.outer.exponent << ',' << f.outer.ci_lo << ',' << f.outer.ci_hi << '\n';
  }
  sink.emit("exit_fits.csv", fits.str());
}

// ---- report: CSV readback and SVG emission ----

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

Csv read_csv(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("missing series file: " + p.string());
  Csv out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (out.header.empty()) {
      out.header = cells;
      continue;
    }
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(std::strtod(c.c_str(), nullptr));
    out.rows.push_back(std::move(row));
  }
  return out;
}

int column(const Csv& c, const std::string& name) {
  for (size_t i = 0; i < c.header.size(); ++i)
    if (c.header[i] == name) return static_cast<int>(i);
  throw std::runtime_error("missing column: " + name);
}

struct SvgSeries {
  std::vector<double> x, y;
  const char* color = "#1f6fb2";
  bool line = true;
};

std::string svg_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                     const std::vector<SvgSeries>& series, const std::vector<std::string>& notes) {
  const double W = 720, H = 480, ml = 70, mr = 20, mt = 50, mb = 50;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]); xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]); ymax = std::max(ymax, s.y[i]);
    }
  if (!(xmax > xmin)) { xmax = xmin + 1; }
  if (!(ymax > ymin)) { ymax = ymin + 1; }
  auto X = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
  auto Y = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };
  std::ostringstream os;
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr << "\" height=\""
     << H - mt - mb << "\" fill=\"none\" stroke=\"#444\"/>\n"
     << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title
     << "</text>\n"
     << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
     << xlabel << "</text>\n"
     << "<text x=\"16\" y=\"" << H / 2 << "\" font-size=\"12\" transform=\"rotate(-90 16 " << H / 2
     << ")\" text-anchor=\"middle\">" << ylabel << "</text>\n";
  os << "<text x=\"" << ml - 4 << "\" y=\"" << H - mb + 14 << "\" font-size=\"10\" text-anchor=\"middle\">"
     << xmin << "</text>\n<text x=\"" << W - mr << "\" y=\"" << H - mb + 14
     << "\" font-size=\"10\" text-anchor=\"middle\">" << xmax << "</text>\n<text x=\"" << ml - 6
     << "\" y=\"" << H - mb << "\" font-size=\"10\" text-anchor=\"end\">" << ymin << "</text>\n<text x=\""
     << ml - 6 << "\" y=\"" << mt + 10 << "\" font-size=\"10\" text-anchor=\"end\">" << ymax
     << "</text>\n";
  for (const auto& s : series) {
    if (s.line && s.x.size() > 1) {
      os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
      for (size_t i = 0; i < s.x.size(); ++i) os << X(s.x[i]) << ',' << Y(s.y[i]) << ' ';
      os << "\"/>\n";
    }
    for (size_t i = 0; i < s.x.size(); ++i)
      os << "<circle cx=\"" << X(s.x[i]) << "\" cy=\"" << Y(s.y[i]) << "\" r=\"2.5\" fill=\""
         << s.color << "\"/>\n";
  }
  double ty = mt + 16;
  for (const auto& n : notes) {
    os << "<text x=\"" << ml + 8 << "\" y=\"" << ty << "\" font-size=\"12\" fill=\"#333\">" << n
       << "</text>\n";
    ty += 16;
  }
  os << "</svg>\n";
  return os.str();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

}  // namespace

std::vector<TrapEnvironment> load_or_sample_ensemble(const SpaceSpec& spec, double alpha,
                                                     std::uint64_t master_seed, int count,
                                                     const std::string& cache_dir) {
  auto sp = spec.build();
  std::vector<TrapEnvironment> envs;
  envs.reserve(count);
  for (int i = 0; i < count; ++i) {
    const std::uint64_t seed = derive_seed(master_seed, i);
    fs::path cached;
    if (!cache_dir.empty()) {
      std::ostringstream name;
      name << spec.cache_key() << "_a" << alpha << "_s" << seed << ".csv";
      cached = fs::path(cache_dir) / name.str();
    }
    if (!cached.empty() && fs::exists(cached)) {
      Csv c = read_csv(cached);
      std::vector<double> mass(c.rows.size());
      for (const auto& row : c.rows) mass.at(static_cast<size_t>(row.at(0))) = row.at(1);
      envs.push_back(TrapEnvironment::restore(sp, alpha, seed, std::move(mass),
                                              NuRepresentation::increments));
      continue;
    }
    envs.push_back(TrapEnvironment::sample_increments(sp, alpha, seed));
    if (!cached.empty()) {
      fs::create_directories(cached.parent_path());
      std::ofstream out(cached);
      envs.back().write_csv(out);
    }
  }
  return envs;
}

std::vector<std::string> emit_plots(const std::string& run_dir, const std::string& out_dir) {
  fs::path in(run_dir), out(out_dir);
  fs::create_directories(out);
  // config echo for reference exponents
  double alpha = 0.5;
  ExponentSet exps{};
  bool have_exps = false;
  if (fs::exists(in / "manifest.json")) {
    std::ifstream mf(in / "manifest.json");
    json man = json::parse(mf);
    const auto& c = man.at("config");
    alpha = c.value("alpha", 0.5);
    SpaceSpec spec;
    spec.kind = c.at("space").value("kind", "path");
    spec.n_cells = c.at("space").value("n_cells", 1024);
    spec.length = c.at("space").value("length", 1.0);
    spec.level = c.at("space").value("level", 4);
    if (alpha > 0.0 && alpha < 1.0) {
      auto sp = spec.build();
      const double beta = sp->metric_params().beta;
      exps = exponent_set(alpha, beta, sp->volume_exponent() / beta);
      have_exps = true;
    }
  }

  std::vector<std::string> written;
  json summary;
  auto save = [&](const std::string& name, const std::string& content) {
    std::ofstream f(out / name, std::ios::binary);
    f << content;
    written.push_back(name);
  };

  if (fs::exists(in / "heatkernel_annealed.csv")) {
    Csv ann = read_csv(in / "heatkernel_annealed.csv");
    const int ct = column(ann, "t"), cm = column(ann, "mean_diag");
    SvgSeries s;
    std::vector<double> ts, ms;
    for (const auto& row : ann.rows) {
      ts.push_back(row[ct]);
      ms.push_back(row[cm]);
      s.x.push_back(std::log10(row[ct]));
      s.y.push_back(std::log10(row[cm]));
    }
    const FitResult f = fit_power_law(ts, ms, ts.front(), ts.back());
    std::vector<std::string> notes = {"fitted slope = " + fmt(f.exponent)};
    std::vector<SvgSeries> series = {s};
    if (have_exps) {
      notes.push_back("reference slope -d_s/2 = " + fmt(-exps.d_s / 2.0));
      SvgSeries ref;
      ref.color = "#c0392b";
      const double y0 = std::log10(ms.front());
      ref.x = {std::log10(ts.front()), std::log10(ts.back())};
      ref.y = {y0, y0 - exps.d_s / 2.0 * (ref.x[1] - ref.x[0])};
      series.push_back(ref);
    }
    save("diagonal_decay.svg",
         svg_plot("annealed on-diagonal decay", "log10 t", "log10 mean p_t(o,o)", series, notes));
    summary["diagonal_slope"] = f.exponent;
    if (have_exps) summary["diagonal_reference"] = -exps.d_s / 2.0;

    if (have_exps) {
      // off-diagonal collapse in the stretched variable
      SvgSeries sc;
      sc.line = false;
      sc.color = "#27813f";
      for (size_t col = 0; col < ann.header.size(); ++col) {
        const std::string& h = ann.header[col];
        if (h.rfind("mean_off_", 0) != 0) continue;
        const double d = std::strtod(h.c_str() + 9, nullptr);
        for (const auto& row : ann.rows) {
          const double ratio = row[col] / row[cm];
          if (ratio <= 0.0 || ratio >= 1.0) continue;
          const double a = std::pow(d, exps.d_w) / row[ct];
          if (a <= 1.0) continue;
          sc.x.push_back(std::pow(a, 1.0 / (exps.d_w - 1.0)));
          sc.y.push_back(-std::log(ratio));
        }
      }
      if (!sc.x.empty())
        save("offdiag_collapse.svg",
             svg_plot("off-diagonal collapse", "(d^{d_w}/t)^{1/(d_w-1)}", "-log p ratio", {sc},
                      {"expected: linear through the origin"}));
    }
  }

  if (fs::exists(in / "subordinator_cdf.csv")) {
    Csv cdf = read_csv(in / "subordinator_cdf.csv");
    const int cx = column(cdf, "x"), cc = column(cdf, "cdf");
    SvgSeries s;
    s.line = false;
    for (const auto& row : cdf.rows) {
      if (row[cx] < 0.05 || row[cx] > 0.3 || row[cc] <= 0.0) continue;
      const double w = std::pow(row[cx], -alpha / (1.0 - alpha));
      s.x.push_back(w);
      s.y.push_back(-std::log(row[cc]) - 0.5 * std::log(w));
    }
    std::vector<std::string> notes;
    if (fs::exists(in / "subordinator_fits.csv")) {
      Csv f = read_csv(in / "subordinator_fits.csv");
      const int ce = column(f, "exponent");
      for (size_t i = 0; i < f.rows.size(); ++i)
        notes.push_back((i == 0 ? "fitted rate = " : "expected rate = ") + fmt(f.rows[i][ce]));
      if (!f.rows.empty()) summary["smallball_rate"] = f.rows[0][ce];
    }
    save("smallball_rate.svg",
         svg_plot("subordinator small-ball rate", "x^{-a/(1-a)}",
                  "-log P - (1/2) log w", {s}, notes));
  }

  if (fs::exists(in / "exponents.csv")) {
    Csv ex = read_csv(in / "exponents.csv");
    if (!ex.rows.empty())
      for (size_t col = 0; col < ex.header.size(); ++col)
        summary["exponents"][ex.header[col]] = ex.rows[0][col];
    if (!ex.rows.empty()) {
      // trivial bar chart of the derived exponents, mostly so a run dir
      // always reports something visual
      SvgSeries s;
      s.line = false;
      for (size_t col = 0; col < ex.header.size(); ++col) {
        s.x.push_back(double(col));
        s.y.push_back(ex.rows[0][col]);
      }
      std::vector<std::string> notes;
      for (size_t col = 0; col < ex.header.size(); ++col)
        notes.push_back(ex.header[col] + " = " + fmt(ex.rows[0][col]));
      save("exponents.svg", svg_plot("exponent family", "index", "value", {s}, notes));
    }
  }

  if (fs::exists(in / "exit_fits.csv")) {
    Csv ef = read_csv(in / "exit_fits.csv");
    const int cD = column(ef, "D"), cs = column(ef, "inner_slope"), co = column(ef, "outer_exponent");
    std::map<double, std::pair<double, int>> byD;
    double outer = 0.0;
    for (const auto& row : ef.rows) {
      byD[row[cD]].first += row[cs];
      byD[row[cD]].second += 1;
      outer = row[co];
    }
    SvgSeries s;
    for (const auto& [D, acc] : byD) {
      s.x.push_back(std::log10(D));
      s.y.push_back(std::log10(acc.first / acc.second));
    }
    std::vector<std::string> notes = {"fitted D-exponent = " + fmt(outer),
                                      "reference 1 + alpha = " + fmt(1.0 + alpha)};
    save("varadhan.svg", svg_plot("exit-tail slope vs D", "log10 D", "log10 s(D)", {s}, notes));
    summary["varadhan_exponent"] = outer;
    summary["varadhan_reference"] = 1.0 + alpha;
  }

  for (const char* kind : {"local_upper_log", "local_seq_upper", "local_lower_loglog",
                           "local_seq_lower", "uniform_inf_phi", "uniform_sup"}) {
    const fs::path p = in / (std::string("volume_") + kind + ".csv");
    if (!fs::exists(p)) continue;
    Csv c = read_csv(p);
    const int cr = column(c, "r"), crat = column(c, "ratio");
    SvgSeries s;
    for (const auto& row : c.rows) {
      s.x.push_back(std::log10(row[cr]));
      s.y.push_back(std::log10(row[crat]));
    }
    save(std::string("envelope_") + kind + ".svg",
         svg_plot(std::string("volume envelope ratio: ") + kind, "log10 r", "log10 ratio", {s}, {}));
  }

  if (written.empty()) throw std::runtime_error("report: no fit-ready series found in " + run_dir);
  std::ostringstream sj;
  sj << summary.dump(2) << '\n';
  save("summary.json", sj.str());
  return written;
}

std::string run_experiment(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  RunSink sink;
  sink.dir = fs::path(cfg.out_dir);
  fs::create_directories(sink.dir);
  const std::string cache_dir = (sink.dir / "env_cache").string();

  json manifest;
  manifest["config"] = config_echo(cfg);
  manifest["format_version"] = 1;
  json seeds = json::array();
  for (int i = 0; i < cfg.ensemble; ++i) seeds.push_back(derive_seed(cfg.seed, i));
  manifest["task_seeds"] = seeds;

  try {
    if (cfg.experiment == "exponents") run_exponents(cfg, sink);
    else if (cfg.experiment == "subordinator") run_subordinator(cfg, sink);
    else if (cfg.experiment == "volume") run_volume(cfg, sink, cache_dir);
    else if (cfg.experiment == "heatkernel") run_heatkernel(cfg, sink, cache_dir);
    else if (cfg.experiment == "exit") run_exit(cfg, sink, cache_dir);
    else if (cfg.experiment == "report") {
      if (cfg.input_dir.empty()) throw std::invalid_argument("report requires input_dir");
      for (const auto& name : emit_plots(cfg.input_dir, cfg.out_dir)) {
        std::ifstream f(sink.dir / name, std::ios::binary);
        std::ostringstream buf;
        buf << f.rdbuf();
        std::ostringstream hex;
        hex << std::hex << fnv1a_hash(buf.str());
        sink.files[name] = hex.str();
      }
    } else {
      throw std::invalid_argument("unknown experiment: " + cfg.experiment);
    }
    manifest["status"] = "ok";
  } catch (...) {
    manifest["status"] = "failed";
    manifest["files"] = sink.files;
    manifest["wall_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0)
            .count();
    std::ofstream mf(sink.dir / "manifest.json");
    mf << manifest.dump(2) << '\n';
    throw;
  }

  manifest["files"] = sink.files;
  manifest["wall_ms"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0)
          .count();
  const fs::path mpath = sink.dir / "manifest.json";
  std::ofstream mf(mpath);
  mf << manifest.dump(2) << '\n';
  return mpath.string();
}

}  // namespace finsim
