#include "nopo/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "nopo/analytics.hpp"
#include "nopo/hash.hpp"
#include "nopo/qsd.hpp"
#include "nopo/rng.hpp"
#include "nopo/sde.hpp"
#include "nopo/semiclassical.hpp"
#include "nopo/spectrum.hpp"
#include "nopo/wigner.hpp"
#include "json.hpp"

namespace nopo {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] void fail(const std::string& msg) {
  throw std::invalid_argument(msg);
}

// Typed access to the raw key -> string map.
struct Cfg {
  const ConfigMap& m;

  bool has(const std::string& k) const { return m.count(k) > 0; }
  std::string str(const std::string& k, const std::string& dflt = {}) const {
    auto it = m.find(k);
    return it == m.end() ? dflt : it->second;
  }
  double num(const std::string& k) const {
    auto it = m.find(k);
    if (it == m.end()) fail("missing required key '" + k + "'");
    return parse_num(k, it->second);
  }
  double num(const std::string& k, double dflt) const {
    auto it = m.find(k);
    return it == m.end() ? dflt : parse_num(k, it->second);
  }
  long integer(const std::string& k, long dflt) const {
    const double v = num(k, double(dflt));
    if (v != std::floor(v)) fail("key '" + k + "' must be an integer");
    return long(v);
  }
  std::uint64_t seed() const {
    auto it = m.find("seed");
    if (it == m.end()) return 1;
    try {
      return std::stoull(trim(it->second));
    } catch (const std::exception&) {
      fail("key 'seed' must be a nonnegative integer");
    }
  }
  std::vector<double> list(const std::string& k) const {
    auto it = m.find(k);
    if (it == m.end()) fail("missing required key '" + k + "'");
    std::vector<double> out;
    std::stringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!trim(tok).empty()) out.push_back(parse_num(k, tok));
    if (out.empty()) fail("key '" + k + "' must list at least one value");
    return out;
  }

 private:
  static double parse_num(const std::string& k, const std::string& v) {
    try {
      std::size_t pos = 0;
      const double x = std::stod(trim(v), &pos);
      if (pos != trim(v).size()) throw std::invalid_argument("trailing");
      return x;
    } catch (const std::exception&) {
      fail("key '" + k + "' has non-numeric value '" + trim(v) + "'");
    }
  }
};

// ---------------------------------------------------------------------------
// Artifact plumbing

struct Sink {
  std::filesystem::path dir;
  std::vector<std::pair<std::string, std::string>> entries;

  void write(const std::string& name, const std::string& content) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) fail("cannot write artifact " + (dir / name).string());
    f << content;
    f.close();
    entries.emplace_back(name, sha256_file_hex(dir / name));
  }
  // For writers that stream directly (binary density matrices).
  void note(const std::string& name) {
    entries.emplace_back(name, sha256_file_hex(dir / name));
  }
};

std::string kv_csv(const std::vector<std::pair<std::string, std::string>>& rows) {
  std::string out = "quantity,value\n";
  for (const auto& [k, v] : rows) out += k + "," + v + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Key registry and parsing

const std::vector<std::string>& registry() {
  static const std::vector<std::string> keys = {
      // mode and bookkeeping
      "mode", "seed", "threads", "branch",
      // physical parameters
      "gamma", "gamma1", "gamma2", "delta", "delta1", "delta2", "chi",
      "gamma3", "k", "E", "eps", "eps_rel", "lambda",
      // ensemble controls (positive-P and QSD)
      "n_traj", "dt", "t_end", "snapshots", "avg_last", "record_stride",
      "escape_bound", "start",
      // QSD truncation and reconstruction
      "n1_trunc", "n2_trunc", "rho_mode", "trunc_tol", "init_n1", "init_n2",
      // spectrum controls
      "theta", "normalization", "omega_max", "n_omega", "chi_list",
      "delta_list",
      // wigner controls
      "rho_file", "keep_mode", "extent", "points", "n_angles", "n_radii",
      // sweeps
      "sweep_param", "sweep_values"};
  return keys;
}

}  // namespace

ConfigMap parse_config_text(const std::string& text) {
  ConfigMap cfg;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty())
      fail("config line " + std::to_string(lineno) + ": empty key");
    if (cfg.count(key))
      fail("config line " + std::to_string(lineno) + ": duplicate key '" +
           key + "'");
    cfg[key] = val;
  }
  return cfg;
}

ConfigMap load_config_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail("cannot read config file " + path.string());
  std::stringstream buf;
  buf << f.rdbuf();
  const std::string text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    // Manifest round-trip: recover the resolved configuration.
    const auto j = nlohmann::json::parse(text);
    if (!j.contains("config") || !j["config"].is_object())
      fail("manifest " + path.string() + " has no config object");
    ConfigMap cfg;
    for (const auto& [k, v] : j["config"].items())
      cfg[k] = v.get<std::string>();
    return cfg;
  }
  return parse_config_text(text);
}

const std::vector<std::string>& known_config_keys() { return registry(); }

namespace {

void reject_unknown_keys(const ConfigMap& cfg) {
  const auto& known = registry();
  std::string bad;
  for (const auto& [k, v] : cfg)
    if (std::find(known.begin(), known.end(), k) == known.end())
      bad += (bad.empty() ? "" : ", ") + k;
  if (!bad.empty()) fail("unknown config keys: " + bad);
}

}  // namespace

double numeric_threshold_eps(const Params& p) {
  validate(p);
  // Bracket the growth-rate sign change by doubling, then bisect.
  auto with_eps = [&p](double eps) {
    Params q = p;
    q.k = (q.k > 0.0) ? q.k : 1.0;
    q.E = eps * q.gamma3 / q.k;
    return q;
  };
  double hi = std::max({p.gamma1, p.gamma2, 1.0});
  auto growth = [&with_eps](double eps) {
    return origin_growth_rates(with_eps(eps)).real().maxCoeff();
  };
  int guard = 0;
  while (growth(hi) <= 0.0) {
    hi *= 2.0;
    if (++guard > 60) fail("numeric_threshold_eps: no instability up to huge eps");
  }
  return growth_threshold_eps(with_eps(0.0), 0.0, hi);
}

Params params_from_config(const ConfigMap& cm) {
  Cfg c{cm};
  Params p;

  const bool split_gamma = c.has("gamma1") || c.has("gamma2");
  if (c.has("gamma") && split_gamma)
    fail("give either gamma or gamma1+gamma2, not both");
  if (split_gamma) {
    p.gamma1 = c.num("gamma1");
    p.gamma2 = c.num("gamma2");
  } else {
    p.gamma1 = p.gamma2 = c.num("gamma");
  }

  const bool split_delta = c.has("delta1") || c.has("delta2");
  if (c.has("delta") && split_delta)
    fail("give either delta or delta1+delta2, not both");
  if (split_delta) {
    p.delta1 = c.num("delta1");
    p.delta2 = c.num("delta2");
  } else {
    p.delta1 = p.delta2 = c.num("delta", 0.0);
  }

  p.chi = c.num("chi", 0.0);
  p.gamma3 = c.num("gamma3", 100.0);

  const int drives = int(c.has("eps")) + int(c.has("eps_rel")) + int(c.has("E"));
  if (drives != 1) fail("give exactly one drive: eps, eps_rel, or E (with k)");
  if (c.has("E")) {
    if (!c.has("k")) fail("drive E requires k");
    if (c.has("lambda")) fail("give either k+E or lambda, not both");
    p.k = c.num("k");
    p.E = c.num("E");
  } else {
    const double lam = c.num("lambda", -1.0);
    if (!(lam >= 0.0)) fail("eps/eps_rel drives require lambda >= 0");
    if (c.has("k")) fail("give either k+E or eps/lambda, not both");
    double eps;
    if (c.has("eps")) {
      eps = c.num("eps");
    } else {
      Params probe = p;
      probe.k = std::sqrt(std::max(lam, 1e-12) * p.gamma3);
      probe.E = 0.0;
      const double eth = probe.symmetric() ? threshold_eps(probe)
                                           : numeric_threshold_eps(probe);
      eps = c.num("eps_rel") * eth;
    }
    if (eps > 0.0 && lam == 0.0)
      fail("a nonzero eps drive requires lambda > 0 (set a small lambda)");
    p.k = std::sqrt(lam * p.gamma3);
    p.E = (p.k > 0.0) ? eps * p.gamma3 / p.k : 0.0;
  }
  validate(p);
  return p;
}

namespace {

// ---------------------------------------------------------------------------
// Mode implementations.  Each returns summary scalars for the manifest.

using Results = std::map<std::string, double>;

void run_steady(const Cfg& c, const Params& p, Sink& sink, Results& res) {
  std::vector<std::pair<std::string, std::string>> rows;
  rows.emplace_back("eps", g17(p.eps()));
  rows.emplace_back("lambda", g17(p.lambda()));
  const bool locked = is_phase_locked(p);
  rows.emplace_back("phase_locked", locked ? "1" : "0");
  res["phase_locked"] = locked;
  rows.emplace_back("adiabatic_warning", p.adiabatic_warning() ? "1" : "0");
  if (p.symmetric()) {
    const double eth = threshold_eps(p);
    rows.emplace_back("eps_th", g17(eth));
    res["eps_th"] = eth;
    if (p.lambda() > 0.0) {
      const SteadyState s = steady_state(p, int(c.integer("branch", 0)));
      rows.emplace_back("n0", g17(s.n0));
      rows.emplace_back("phi1", g17(s.phi1));
      rows.emplace_back("phi2", g17(s.phi2));
      rows.emplace_back("anti_phase", s.anti_phase ? "1" : "0");
      rows.emplace_back("phases_defined", s.phases_defined ? "1" : "0");
      res["n0"] = s.n0;
    }
  } else {
    const double eth = numeric_threshold_eps(p);
    rows.emplace_back("eps_th_numeric", g17(eth));
    res["eps_th"] = eth;
  }
  sink.write("steady.csv", kv_csv(rows));
}

void run_stability(const Cfg& c, const Params& p, Sink& sink, Results& res) {
  std::vector<std::pair<std::string, std::string>> rows;
  const bool locked = is_phase_locked(p);
  rows.emplace_back("phase_locked", locked ? "1" : "0");
  res["phase_locked"] = locked;

  const Eigen::Vector4cd rates = origin_growth_rates(p);
  for (int i = 0; i < 4; ++i) {
    rows.emplace_back("origin_rate_" + std::to_string(i) + "_re",
                      g17(rates(i).real()));
    rows.emplace_back("origin_rate_" + std::to_string(i) + "_im",
                      g17(rates(i).imag()));
  }
  const double eth = numeric_threshold_eps(p);
  rows.emplace_back("eps_th_numeric", g17(eth));
  res["eps_th_numeric"] = eth;

  // Semiclassical attractor from a small deterministic seed amplitude.
  const std::uint64_t seed = c.seed();
  const auto z01 = rng::normal_pair(seed, 0, 0, 0);
  const auto z23 = rng::normal_pair(seed, 0, 0, 1);
  CState x0{1e-2 * std::complex<double>(z01.z0, z01.z1),
            1e-2 * std::complex<double>(z23.z0, z23.z1)};
  const double fastest =
      std::max({p.gamma1, p.gamma2, std::abs(p.delta1) + p.chi,
                std::abs(p.delta2) + p.chi, p.eps()});
  const double dt = c.num("dt", 0.005 / fastest);
  const double t_end = c.num("t_end", 80.0 / std::min(p.gamma1, p.gamma2));
  const long total = std::lround(t_end / dt);
  const int stride = int(std::max(1L, total / 8000));
  const double cap = (p.lambda() > 0.0)
                         ? std::sqrt(10.0 * std::max(1.0, p.eps() / p.lambda()))
                         : 1e6;
  const Trajectory tr =
      integrate(p, x0, t_end, dt, stride, c.num("escape_bound", cap));
  const PulsingDiagnosis d = diagnose_pulsing(tr);
  const char* kind = d.kind == PulsingDiagnosis::Kind::fixed_point ? "fixed_point"
                     : d.kind == PulsingDiagnosis::Kind::periodic  ? "periodic"
                                                                   : "undecided";
  rows.emplace_back("classification", kind);
  rows.emplace_back("period", g17(d.period));
  rows.emplace_back("peak_ratio", g17(d.peak_ratio));
  rows.emplace_back("late_span", g17(d.late_span));
  res["periodic"] = d.kind == PulsingDiagnosis::Kind::periodic ? 1.0 : 0.0;
  res["period"] = d.period;

  std::string traj = "t,n1,n2\n";
  for (std::size_t i = 0; i < tr.t.size(); ++i)
    traj += g17(tr.t[i]) + "," + g17(std::norm(tr.x[i].a1)) + "," +
            g17(std::norm(tr.x[i].a2)) + "\n";
  sink.write("trajectory.csv", traj);
  sink.write("stability.csv", kv_csv(rows));
}

void run_correlators(const Cfg&, const Params& p, Sink& sink, Results& res) {
  const SteadyState s = steady_state(p);
  const QuadCorrelators qc = correlators_above(p);
  const PhotonStatistics st = photon_number_statistics(p);
  std::vector<std::pair<std::string, std::string>> rows;
  auto put = [&rows, &res](const std::string& k, double v) {
    rows.emplace_back(k, g17(v));
    res[k] = v;
  };
  put("n0", s.n0);
  put("phi1", s.phi1);
  put("phi2", s.phi2);
  put("dn_plus_sq", qc.plus(0, 0));
  put("dn_dphi_plus_01", qc.plus(0, 1));
  put("dn_dphi_plus_10", qc.plus(1, 0));
  put("dphi_plus_sq", qc.plus(1, 1));
  put("dn_minus_sq", qc.minus(0, 0));
  put("dn_dphi_minus", qc.minus(0, 1));
  put("dphi_minus_sq", qc.minus(1, 1));
  put("R", st.R);
  put("R_N", st.R_N);
  put("g", st.g);
  put("g12", st.g12);
  sink.write("correlators.csv", kv_csv(rows));
}

void run_sde(const Cfg& c, const Params& p, Sink& sink, Results& res) {
  SdeConfig sc;
  sc.n_traj = c.integer("n_traj", 1000);
  sc.dt = c.num("dt", 1e-4);
  sc.t_end = c.num("t_end", 10.0);
  sc.seed = c.seed();
  sc.threads = int(c.integer("threads", 1));
  sc.escape_bound = c.num("escape_bound", 1e3);
  sc.snapshots = int(c.integer("snapshots", 50));
  sc.avg_last = int(c.integer("avg_last", 10));
  sc.record_stride = int(c.integer("record_stride", 0));

  std::optional<SteadyState> locked;
  if (p.symmetric() && p.lambda() > 0.0 && is_phase_locked(p)) {
    const SteadyState s = steady_state(p);
    if (s.phases_defined) locked = s;
  }
  const std::string start = c.str("start", "vacuum");
  if (start == "steady") {
    if (!locked) fail("start = steady requires a locked above-threshold state");
    const double r = std::sqrt(locked->n0);
    sc.x0.a1 = std::polar(r, locked->phi1);
    sc.x0.a2 = std::polar(r, locked->phi2);
    sc.x0.b1 = std::conj(sc.x0.a1);
    sc.x0.b2 = std::conj(sc.x0.a2);
  } else if (start != "vacuum") {
    fail("start must be vacuum or steady");
  }
  sc.reference = locked;

  const SdeResult r = run_ensemble(p, sc);

  std::string mom = "observable,value_re,value_im,se_re,se_im\n";
  auto put = [&mom](const std::string& k, const CEstimate& e) {
    mom += k + "," + g17(e.value.real()) + "," + g17(e.value.imag()) + "," +
           g17(e.se_re) + "," + g17(e.se_im) + "\n";
  };
  put("n1", r.n1);
  put("n2", r.n2);
  put("a1", r.a1);
  put("a2", r.a2);
  put("a12", r.a12);
  if (r.has_deviations) {
    put("dn_minus_sq", r.var_dn_minus);
    put("dphi_minus_sq", r.var_dphi_minus);
    put("dn_dphi_minus", r.cov_dn_dphi_minus);
    put("dn_plus_sq", r.var_dn_plus);
    put("dphi_plus_sq", r.var_dphi_plus);
    put("dn_dphi_plus", r.cov_dn_dphi_plus);
  }
  mom += "n_traj," + std::to_string(r.n_traj) + ",0,0,0\n";
  mom += "n_divergent," + std::to_string(r.n_divergent) + ",0,0,0\n";
  sink.write("moments.csv", mom);

  std::string snaps = "t,n1,n2\n";
  for (std::size_t i = 0; i < r.snap_t.size(); ++i)
    snaps += g17(r.snap_t[i]) + "," + g17(r.snap_n1[i]) + "," +
             g17(r.snap_n2[i]) + "\n";
  sink.write("snapshots.csv", snaps);

  if (!r.traj0.empty()) {
    std::string tr = "t,re_a1,im_a1,re_a2,im_a2,n1,n2\n";
    for (const auto& [t, x] : r.traj0)
      tr += g17(t) + "," + g17(x.a1.real()) + "," + g17(x.a1.imag()) + "," +
            g17(x.a2.real()) + "," + g17(x.a2.imag()) + "," +
            g17(std::real(x.b1 * x.a1)) + "," + g17(std::real(x.b2 * x.a2)) +
            "\n";
    sink.write("trajectory.csv", tr);
  }

  const double nbar = 0.5 * (r.n1.value.real() + r.n2.value.real());
  res["n1"] = r.n1.value.real();
  res["n2"] = r.n2.value.real();
  res["n1_se"] = r.n1.se_re;
  res["n2_se"] = r.n2.se_re;
  res["n_divergent"] = double(r.n_divergent);
  if (r.has_deviations && nbar > 0.0) {
    res["dn_minus_sq"] = r.var_dn_minus.value.real();
    res["dphi_minus_sq"] = r.var_dphi_minus.value.real();
    res["dphi_minus_sq_se"] = r.var_dphi_minus.se_re;
    res["R_N"] =
        (2.0 * nbar + r.var_dn_minus.value.real()) / (2.0 * nbar);
  }
}

void write_spectrum_csv(const Params& p, const Cfg& c, Sink& sink,
                        const std::string& name, Results& res,
                        const std::string& tag) {
  const Normalization norm = c.str("normalization", "matched") == "density"
                                 ? Normalization::density
                                 : Normalization::matched;
  if (c.has("normalization") && c.str("normalization") != "matched" &&
      c.str("normalization") != "density")
    fail("normalization must be matched or density");
  if (!p.symmetric())
    fail("spectrum mode requires symmetric parameters (equal gammas and "
         "deltas)");
  const double omega_max = c.num("omega_max", 8.0) * p.gamma1;
  const int n_omega = int(c.integer("n_omega", 801));
  const BestSqueezing best =
      best_squeezing(p, std::max(101, n_omega / 2), omega_max / p.gamma1, norm);
  const bool theta_opt = c.str("theta", "opt") == "opt";
  const double theta = theta_opt ? best.theta : c.num("theta");

  std::string out;
  out += "# chi=" + g17(p.chi) + " delta1=" + g17(p.delta1) +
         " delta2=" + g17(p.delta2) + " eps=" + g17(p.eps()) +
         " eps_th=" + g17(threshold_eps(p)) + "\n";
  out += "# theta=" + g17(theta) +
         (theta_opt ? " (optimal at the best omega)" : " (fixed)");
  out += std::string(" normalization=") +
         (norm == Normalization::matched ? "matched" : "density") + "\n";
  out += "omega_over_gamma,v_at_theta,v_theta_opt\n";
  for (int i = 0; i < n_omega; ++i) {
    const double w = -omega_max + 2.0 * omega_max * i / double(n_omega - 1);
    const double v = squeezing_variance(p, theta, w, norm);
    // Pointwise optimum over theta at this omega.
    double vopt = v;
    {
      const double delta = p.delta1;
      const SpectralBlocks gp = spectral_blocks(p, w - delta);
      const SpectralBlocks gm = spectral_blocks(p, -w - delta);
      const std::complex<double> Z =
          std::conj(gp.G0(1, 0)) + std::conj(gm.G0(1, 0));
      const double N =
          norm == Normalization::matched ? p.gamma1 : p.gamma1 / M_PI;
      const double base =
          1.0 + N * (gp.G1(0, 0).real() +
                     spectral_blocks(p, -(w - delta)).G1(1, 1).real() +
                     gm.G1(0, 0).real() +
                     spectral_blocks(p, w + delta).G1(1, 1).real());
      vopt = base - 2.0 * N * std::abs(Z);
    }
    out += g17(w / p.gamma1) + "," + g17(v) + "," + g17(vopt) + "\n";
  }
  sink.write(name, out);
  res["v_min" + tag] = best.V;
  res["omega_min" + tag] = best.omega;
  res["theta_opt" + tag] = best.theta;
}

void run_spectrum(const Cfg& c, const ConfigMap& cm, Sink& sink, Results& res) {
  if (c.has("chi_list") && c.has("delta_list"))
    fail("give at most one of chi_list, delta_list");
  auto params_with = [&cm](const std::string& key, double v) {
    ConfigMap m = cm;
    m.erase("chi_list");
    m.erase("delta_list");
    if (key == "delta") {
      m.erase("delta");
      m.erase("delta1");
      m.erase("delta2");
    }
    m[key] = g17(v);
    return params_from_config(m);
  };
  if (c.has("chi_list") || c.has("delta_list")) {
    const bool over_chi = c.has("chi_list");
    const auto values = c.list(over_chi ? "chi_list" : "delta_list");
    for (std::size_t i = 0; i < values.size(); ++i) {
      const Params p = params_with(over_chi ? "chi" : "delta", values[i]);
      write_spectrum_csv(p, c, sink, "spectrum_" + std::to_string(i) + ".csv",
                         res, "_" + std::to_string(i));
    }
  } else {
    const Params p = params_from_config(cm);
    write_spectrum_csv(p, c, sink, "spectrum.csv", res, "");
  }
}

void write_density_artifacts(const QsdResult& r, QsdConfig::Rho mode,
                             const EffectiveModel& m, Sink& sink) {
  if (mode == QsdConfig::Rho::none) return;
  if (mode == QsdConfig::Rho::full) {
    r.rho12.save(sink.dir / "rho_pair.bin");
    sink.note("rho_pair.bin");
    const DensityMatrix r1 = reduce_mode(r.rho12, m.n1, m.n2, 1);
    const DensityMatrix r2 = reduce_mode(r.rho12, m.n1, m.n2, 2);
    r1.save(sink.dir / "rho_mode1.bin");
    sink.note("rho_mode1.bin");
    r2.save(sink.dir / "rho_mode2.bin");
    sink.note("rho_mode2.bin");
  } else {
    r.rho1.save(sink.dir / "rho_mode1.bin");
    sink.note("rho_mode1.bin");
    r.rho2.save(sink.dir / "rho_mode2.bin");
    sink.note("rho_mode2.bin");
  }
}

QsdConfig qsd_config(const Cfg& c) {
  QsdConfig qc;
  qc.n_traj = c.integer("n_traj", 500);
  qc.dt = c.num("dt", 1e-4);
  qc.t_end = c.num("t_end", 10.0);
  qc.seed = c.seed();
  qc.threads = int(c.integer("threads", 1));
  qc.snapshots = int(c.integer("snapshots", 50));
  qc.avg_last = int(c.integer("avg_last", 10));
  qc.record_stride = int(c.integer("record_stride", 0));
  qc.trunc_tol = c.num("trunc_tol", 1e-5);
  qc.init_n1 = int(c.integer("init_n1", 0));
  qc.init_n2 = int(c.integer("init_n2", 0));
  const std::string rm = c.str("rho_mode", "reduced");
  if (rm == "none")
    qc.rho = QsdConfig::Rho::none;
  else if (rm == "reduced")
    qc.rho = QsdConfig::Rho::reduced;
  else if (rm == "full")
    qc.rho = QsdConfig::Rho::full;
  else
    fail("rho_mode must be none, reduced, or full");
  return qc;
}

EffectiveModel model_from(const Cfg& c, const Params& p) {
  if (!c.has("n1_trunc") || !c.has("n2_trunc"))
    fail("qsd modes require n1_trunc and n2_trunc (rule of thumb: "
         "ceil(n0 + 6 sqrt(n0 + 1)) per mode)");
  return build_effective_model(p, int(c.integer("n1_trunc", 0)),
                               int(c.integer("n2_trunc", 0)));
}

void qsd_common_artifacts(const QsdResult& r, Sink& sink, Results& res) {
  std::string mom = "observable,value_re,value_im,se_re,se_im\n";
  auto put = [&mom](const std::string& k, const CMoment& e) {
    mom += k + "," + g17(e.value.real()) + "," + g17(e.value.imag()) + "," +
           g17(e.se_re) + "," + g17(e.se_im) + "\n";
  };
  put("a1", r.a1);
  put("a2", r.a2);
  put("n1", r.n1);
  put("n2", r.n2);
  put("a12", r.a12);
  put("a1d_a2", r.a1d_a2);
  put("a1_sq", r.a1_sq);
  put("a2_sq", r.a2_sq);
  mom += "n_traj," + std::to_string(r.n_traj) + ",0,0,0\n";
  mom += "n_flagged," + std::to_string(r.n_flagged) + ",0,0,0\n";
  mom += "mean_log_norm_per_step," + g17(r.mean_log_norm_per_step) +
         ",0,0,0\n";
  sink.write("moments.csv", mom);

  std::string snaps = "t,n1,n2\n";
  for (std::size_t i = 0; i < r.snap_t.size(); ++i)
    snaps += g17(r.snap_t[i]) + "," + g17(r.snap_n1[i]) + "," +
             g17(r.snap_n2[i]) + "\n";
  sink.write("snapshots.csv", snaps);

  if (!r.traj0.empty()) {
    std::string tr = "t,n1,n2\n";
    for (const auto& s : r.traj0)
      tr += g17(s[0]) + "," + g17(s[1]) + "," + g17(s[2]) + "\n";
    sink.write("trajectory.csv", tr);
  }

  const PairMoments pm = pair_moments(r);
  const DuanResult duan = duan_minimize(pm);
  std::string dcsv = kv_csv({{"V", g17(duan.V)},
                             {"theta1", g17(duan.theta1)},
                             {"theta2", g17(duan.theta2)},
                             {"V_at_zero", g17(duan_variance(pm, 0.0, 0.0))}});
  sink.write("duan.csv", dcsv);

  res["n1"] = r.n1.value.real();
  res["n2"] = r.n2.value.real();
  res["n1_se"] = r.n1.se_re;
  res["n2_se"] = r.n2.se_re;
  res["n_flagged"] = double(r.n_flagged);
  res["flagged"] = r.flagged ? 1.0 : 0.0;
  res["duan_v"] = duan.V;
}

void run_qsd(const Cfg& c, const Params& p, Sink& sink, Results& res) {
  const EffectiveModel m = model_from(c, p);
  const QsdConfig qc = qsd_config(c);
  const QsdResult r = run_qsd_ensemble(m, qc);
  qsd_common_artifacts(r, sink, res);
  write_density_artifacts(r, qc.rho, m, sink);
}

void run_wigner(const Cfg& c, Sink& sink, Results& res) {
  if (!c.has("rho_file")) fail("wigner mode requires rho_file");
  std::filesystem::path rp = c.str("rho_file");
  DensityMatrix rho = DensityMatrix::load(rp);
  if (c.has("keep_mode")) {
    const int keep = int(c.integer("keep_mode", 1));
    const int n1 = int(c.integer("n1_trunc", 0)),
              n2 = int(c.integer("n2_trunc", 0));
    if (n1 * n2 != rho.dim)
      fail("keep_mode reduction requires n1_trunc*n2_trunc == stored dim");
    rho = reduce_mode(rho, n1, n2, keep);
  }
  WignerGrid grid;
  grid.extent = c.num("extent", 0.0);
  grid.points = int(c.integer("points", 201));
  const WignerField f = wigner_from_density(rho, grid);

  std::string longcsv = "x,y,w\n";
  for (int i = 0; i < f.grid.points; ++i)
    for (int j = 0; j < f.grid.points; ++j)
      longcsv +=
          g17(f.x[i]) + "," + g17(f.x[j]) + "," + g17(f.at(i, j)) + "\n";
  sink.write("wigner.csv", longcsv);

  // Contour-ready matrix: first row lists x, first column lists y.
  std::string mat = "y\\x";
  for (int i = 0; i < f.grid.points; ++i) mat += "," + g17(f.x[i]);
  mat += "\n";
  for (int j = 0; j < f.grid.points; ++j) {
    mat += g17(f.x[j]);
    for (int i = 0; i < f.grid.points; ++i) mat += "," + g17(f.at(i, j));
    mat += "\n";
  }
  sink.write("wigner_matrix.csv", mat);

  const double h = 2.0 * f.grid.extent / (f.grid.points - 1);
  double mass = 0.0;
  for (double v : f.w) mass += v;
  mass *= h * h;

  const PhasePortrait pp =
      phase_portrait(f, int(c.integer("n_angles", 360)),
                     int(c.integer("n_radii", 120)));
  const double asym = twofold_asymmetry(f);
  std::vector<std::pair<std::string, std::string>> rows = {
      {"r_star", g17(pp.r_star)},
      {"peak_count", std::to_string(pp.peak_count)},
      {"mean_fwhm", g17(pp.mean_fwhm)},
      {"uniformity", g17(pp.uniformity)},
      {"twofold_asymmetry", g17(asym)},
      {"norm_integral", g17(mass)}};
  for (std::size_t i = 0; i < pp.peak_angles.size(); ++i)
    rows.emplace_back("peak_angle_" + std::to_string(i),
                      g17(pp.peak_angles[i]));
  sink.write("portrait.csv", kv_csv(rows));

  res["peak_count"] = pp.peak_count;
  res["uniformity"] = pp.uniformity;
  res["twofold_asymmetry"] = asym;
  res["norm_integral"] = mass;
  res["mean_fwhm"] = pp.mean_fwhm;
  res["r_star"] = pp.r_star;
}

void run_duan_sweep(const Cfg& c, const ConfigMap& cm, Sink& sink,
                    Results& res) {
  const std::string axis = c.str("sweep_param");
  if (axis != "eps" && axis != "eps_rel" && axis != "chi")
    fail("sweep axis must be a numeric parameter: one of eps, eps_rel, chi "
         "(got '" + axis + "')");
  const auto values = c.list("sweep_values");
  const std::uint64_t base_seed = c.seed();

  std::string table =
      "value,eps,V,theta1,theta2,n1,n2,re_a12,im_a12,n_flagged\n";
  std::vector<double> vs, Vs;
  double vmin = std::numeric_limits<double>::infinity(), argmin = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    ConfigMap m = cm;
    m.erase("sweep_param");
    m.erase("sweep_values");
    if (axis == "chi")
      m["chi"] = g17(values[i]);
    else {
      m.erase("eps");
      m.erase("eps_rel");
      m[axis] = g17(values[i]);
    }
    const Params p = params_from_config(m);
    const Cfg ci{m};
    const EffectiveModel model = model_from(ci, p);
    QsdConfig qc = qsd_config(ci);
    qc.rho = QsdConfig::Rho::none;  // moments suffice for V
    qc.seed = rng::derive_seed(base_seed, std::uint32_t(i));
    const QsdResult r = run_qsd_ensemble(model, qc);
    const PairMoments pm = pair_moments(r);
    const DuanResult d = duan_minimize(pm);
    table += g17(values[i]) + "," + g17(p.eps()) + "," + g17(d.V) + "," +
             g17(d.theta1) + "," + g17(d.theta2) + "," +
             g17(r.n1.value.real()) + "," + g17(r.n2.value.real()) + "," +
             g17(r.a12.value.real()) + "," + g17(r.a12.value.imag()) + "," +
             std::to_string(r.n_flagged) + "\n";
    vs.push_back(values[i]);
    Vs.push_back(d.V);
    if (d.V < vmin) {
      vmin = d.V;
      argmin = values[i];
    }
  }
  sink.write("duan_sweep.csv", table);

  // Quadratic least-squares fit V(value) = c0 + c1 v + c2 v^2 with R^2.
  if (vs.size() >= 3) {
    Eigen::MatrixXd X(vs.size(), 3);
    Eigen::VectorXd y(vs.size());
    for (std::size_t i = 0; i < vs.size(); ++i) {
      X(i, 0) = 1.0;
      X(i, 1) = vs[i];
      X(i, 2) = vs[i] * vs[i];
      y(i) = Vs[i];
    }
    const Eigen::Vector3d coef =
        X.colPivHouseholderQr().solve(y);
    const double ss_res = (y - X * coef).squaredNorm();
    const double ss_tot = (y.array() - y.mean()).square().sum();
    const double r2 = (ss_tot > 0.0) ? 1.0 - ss_res / ss_tot : 1.0;
    sink.write("duan_fit.csv", kv_csv({{"c0", g17(coef(0))},
                                       {"c1", g17(coef(1))},
                                       {"c2", g17(coef(2))},
                                       {"r_squared", g17(r2)}}));
    res["fit_r_squared"] = r2;
    res["fit_c2"] = coef(2);
  }
  res["v_min"] = vmin;
  res["v_argmin"] = argmin;
}

// ---------------------------------------------------------------------------
// Presets (the same texts are checked in under presets/<name>.cfg).

const std::vector<std::pair<std::string, std::string>>& presets() {
  static const std::vector<std::pair<std::string, std::string>> table = {
      {"fig1a", R"(# Below-threshold locked regime, trajectory view.
mode = qsd
gamma = 1
delta = 10
chi = 0.1
lambda = 0.1
eps = 5
n_traj = 3000
n1_trunc = 12
n2_trunc = 12
dt = 1e-4
t_end = 8
rho_mode = reduced
record_stride = 100
seed = 1
)"},
      {"fig1b", R"(# At-threshold regime (eps = eps_th = 9.9504...).
mode = qsd
gamma = 1
delta = 10
chi = 0.1
lambda = 0.1
eps_rel = 1.0
n_traj = 3000
n1_trunc = 24
n2_trunc = 24
dt = 1e-4
t_end = 10
rho_mode = reduced
record_stride = 100
seed = 1
)"},
      {"fig1c", R"(# Above-threshold locked regime (n0 = 37.95).  Long run.
mode = qsd
gamma = 1
delta = 10
chi = 0.1
lambda = 0.1
eps = 11
n_traj = 3000
n1_trunc = 80
n2_trunc = 80
dt = 8e-5
t_end = 10
rho_mode = reduced
record_stride = 125
seed = 1
)"},
      {"fig1d", R"(# Above threshold with stronger waveplate coupling.  Long run.
mode = qsd
gamma = 1
delta = 10
chi = 0.5
lambda = 0.1
eps = 11
n_traj = 3000
n1_trunc = 90
n2_trunc = 90
dt = 8e-5
t_end = 10
rho_mode = reduced
record_stride = 125
seed = 1
)"},
      {"fig1c-sde", R"(# Positive-P ensemble at the above-threshold locked point.
mode = sde
gamma = 1
delta = 10
chi = 0.1
lambda = 0.1
eps = 11
n_traj = 10000
dt = 1e-4
t_end = 16
start = steady
escape_bound = 1000
snapshots = 50
avg_last = 10
seed = 1
)"},
      {"fig2a", R"(# Squeezing spectra at half threshold, growing waveplate coupling.
mode = spectrum
gamma = 1
delta = 0
lambda = 0.1
eps_rel = 0.5
chi_list = 0, 0.2, 0.5
theta = opt
normalization = matched
)"},
      {"fig2b", R"(# Squeezing spectra at 0.8 threshold, growing waveplate coupling.
mode = spectrum
gamma = 1
delta = 0
lambda = 0.1
eps_rel = 0.8
chi_list = 0, 0.2, 0.5
theta = opt
normalization = matched
)"},
      {"fig2c", R"(# Squeezing spectra at half threshold, growing detuning.
mode = spectrum
gamma = 1
chi = 0.05
lambda = 0.1
eps_rel = 0.5
delta_list = 0.2, 0.5, 1
theta = opt
normalization = matched
)"},
      {"fig3", R"(# Self-pulsing regime (locking condition violated).  Long run.
mode = qsd
gamma = 1
delta1 = 10
delta2 = -5
chi = 0.5
lambda = 0.1
eps = 4
n_traj = 12000
n1_trunc = 40
n2_trunc = 40
dt = 1e-4
t_end = 20
rho_mode = reduced
record_stride = 100
seed = 1
)"},
      {"fig4", R"(# Phase-diffusion regime at small opposite detunings.  Long run.
mode = qsd
gamma = 1
delta1 = 0.1
delta2 = -0.1
chi = 0.5
lambda = 0.1
eps = 3
n_traj = 3000
n1_trunc = 45
n2_trunc = 45
dt = 1e-4
t_end = 20
rho_mode = reduced
record_stride = 100
seed = 1
)"},
      {"fig5", R"(# Duan variance vs drive across the (numeric) threshold.  Long run.
mode = duan-sweep
sweep_param = eps_rel
sweep_values = 0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.4, 1.5, 1.6
gamma = 1
delta1 = 10
delta2 = -10
chi = 0.1
lambda = 0.1
n_traj = 3000
n1_trunc = 24
n2_trunc = 24
dt = 1e-4
t_end = 12
seed = 1
)"},
      {"fig6", R"(# Duan variance vs waveplate coupling above threshold.  Long run.
mode = duan-sweep
sweep_param = chi
sweep_values = 0, 0.1, 0.2, 0.3, 0.4, 0.5
gamma = 1
delta1 = 10
delta2 = -10
lambda = 0.1
eps = 3
n_traj = 3000
n1_trunc = 40
n2_trunc = 40
dt = 1e-4
t_end = 12
seed = 1
)"},
      {"fig1c-scaled", R"(# Above-threshold locked regime at lambda = 0.5 (n0 = 7.59).
# Reconstruction window [1.85, 4]: after amplitude settling, before phase
# diffusion fills in the angular doublet.
mode = qsd
gamma = 1
delta = 10
chi = 0.1
lambda = 0.5
eps = 11
n_traj = 500
n1_trunc = 24
n2_trunc = 24
dt = 8e-5
t_end = 4
snapshots = 40
avg_last = 22
rho_mode = reduced
record_stride = 0
seed = 1
)"},
      {"fig1d-scaled", R"(# Stronger waveplate coupling at lambda = 0.5 (n0 = 9.09).
# Same reconstruction window as fig1c-scaled for a like-for-like width
# comparison of the angular doublet.
mode = qsd
gamma = 1
delta = 10
chi = 0.5
lambda = 0.5
eps = 11
n_traj = 500
n1_trunc = 24
n2_trunc = 24
dt = 8e-5
t_end = 4
snapshots = 40
avg_last = 22
rho_mode = reduced
record_stride = 0
seed = 1
)"},
      {"fig3-scaled", R"(# Self-pulsing regime at lambda = 0.5.
mode = qsd
gamma = 1
delta1 = 10
delta2 = -5
chi = 0.5
lambda = 0.5
eps = 4
n_traj = 2000
n1_trunc = 14
n2_trunc = 14
dt = 1e-4
t_end = 12
snapshots = 48
avg_last = 12
rho_mode = reduced
record_stride = 50
seed = 1
)"},
      {"fig4-scaled", R"(# Phase-diffusion regime at lambda = 0.5.
mode = qsd
gamma = 1
delta1 = 0.1
delta2 = -0.1
chi = 0.5
lambda = 0.5
eps = 3
n_traj = 1000
n1_trunc = 16
n2_trunc = 16
dt = 1e-4
t_end = 16
rho_mode = reduced
record_stride = 50
seed = 1
)"},
      {"fig5-scaled", R"(# Duan variance vs drive at lambda = 0.5, reduced ensemble.
mode = duan-sweep
sweep_param = eps_rel
sweep_values = 0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.4, 1.5, 1.6
gamma = 1
delta1 = 10
delta2 = -10
chi = 0.1
lambda = 0.5
n_traj = 240
n1_trunc = 12
n2_trunc = 12
dt = 1e-4
t_end = 10
seed = 1
)"},
      {"fig6-scaled", R"(# Duan variance vs waveplate coupling at lambda = 0.5.
mode = duan-sweep
sweep_param = chi
sweep_values = 0, 0.1, 0.2, 0.3, 0.4, 0.5
gamma = 1
delta1 = 10
delta2 = -10
lambda = 0.5
eps = 3
n_traj = 300
n1_trunc = 14
n2_trunc = 14
dt = 1e-4
t_end = 10
seed = 1
)"},
  };
  return table;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [n, t] : presets()) names.push_back(n);
  return names;
}

const std::string& preset_text(const std::string& name) {
  for (const auto& [n, t] : presets())
    if (n == name) return t;
  std::string known;
  for (const auto& [n, t] : presets()) known += (known.empty() ? "" : ", ") + n;
  fail("unknown preset '" + name + "' (known: " + known + ")");
}

RunOutcome run_scenario(const ConfigMap& cfg,
                        const std::filesystem::path& out_dir) {
  auto mode_it = cfg.find("mode");
  if (mode_it == cfg.end() || trim(mode_it->second).empty())
    fail("mode required");
  reject_unknown_keys(cfg);
  const std::string mode = trim(mode_it->second);

  static const std::set<std::string> modes = {
      "steady", "stability", "correlators", "sde",
      "spectrum", "qsd", "wigner", "duan-sweep"};
  if (!modes.count(mode)) fail("unknown mode '" + mode + "'");

  std::filesystem::create_directories(out_dir);
  Sink sink{out_dir, {}};
  Results res;
  const Cfg c{cfg};

  if (mode == "wigner") {
    run_wigner(c, sink, res);
  } else if (mode == "spectrum") {
    run_spectrum(c, cfg, sink, res);
  } else if (mode == "duan-sweep") {
    run_duan_sweep(c, cfg, sink, res);
  } else {
    const Params p = params_from_config(cfg);
    if (mode == "steady")
      run_steady(c, p, sink, res);
    else if (mode == "stability")
      run_stability(c, p, sink, res);
    else if (mode == "correlators")
      run_correlators(c, p, sink, res);
    else if (mode == "sde")
      run_sde(c, p, sink, res);
    else  // qsd
      run_qsd(c, p, sink, res);
  }

  // Manifest: resolved config (threads excluded; it never changes output
  // bytes), summary scalars, and artifact checksums.  Written last.
  nlohmann::json j;
  j["format"] = "nopo-manifest-1";
  j["mode"] = mode;
  nlohmann::json jc = nlohmann::json::object();
  for (const auto& [k, v] : cfg)
    if (k != "threads") jc[k] = v;
  j["config"] = jc;
  nlohmann::json jr = nlohmann::json::object();
  for (const auto& [k, v] : res) jr[k] = v;
  j["results"] = jr;
  nlohmann::json ja = nlohmann::json::object();
  for (const auto& [name, sha] : sink.entries) ja[name] = sha;
  j["artifacts"] = ja;
  {
    std::ofstream f(out_dir / "manifest.json", std::ios::binary);
    if (!f) fail("cannot write manifest.json");
    f << j.dump(2) << "\n";
  }

  RunOutcome out;
  out.mode = mode;
  out.out_dir = out_dir;
  out.artifacts = sink.entries;
  out.results = res;
  return out;
}

}  // namespace nopo
