#include "nopo/sde.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "nopo/rng.hpp"

namespace nopo {

PPState pp_drift(const Params& p, const PPState& s) {
  const std::complex<double> i(0.0, 1.0);
  const double eps = p.eps(), lam = p.lambda();
  const std::complex<double> da = eps - lam * s.a1 * s.a2;
  const std::complex<double> db = eps - lam * s.b1 * s.b2;
  PPState out;
  out.a1 = -(p.gamma1 + i * p.delta1) * s.a1 + da * s.b2 - i * p.chi * s.a2;
  out.a2 = -(p.gamma2 + i * p.delta2) * s.a2 + da * s.b1 - i * p.chi * s.a1;
  out.b1 = -(p.gamma1 - i * p.delta1) * s.b1 + db * s.a2 + i * p.chi * s.b2;
  out.b2 = -(p.gamma2 - i * p.delta2) * s.b2 + db * s.a1 + i * p.chi * s.b1;
  return out;
}

NoiseIncrements sample_noise(const Params& p, const PPState& s, double dt,
                             std::uint64_t seed, std::uint32_t traj,
                             std::uint64_t step) {
  const double eps = p.eps(), lam = p.lambda();
  const std::complex<double> da = eps - lam * s.a1 * s.a2;
  const std::complex<double> db = eps - lam * s.b1 * s.b2;
  const std::complex<double> sa = std::sqrt(0.5 * da);
  const std::complex<double> sb = std::sqrt(0.5 * db);
  const double sq = std::sqrt(dt);
  const auto xa = rng::normal_pair(seed, traj, step, 0);
  const auto xb = rng::normal_pair(seed, traj, step, 1);
  NoiseIncrements n;
  n.r1 = sa * std::complex<double>(xa.z0, xa.z1) * sq;
  n.r2 = sa * std::complex<double>(xa.z0, -xa.z1) * sq;
  n.s1 = sb * std::complex<double>(xb.z0, xb.z1) * sq;
  n.s2 = sb * std::complex<double>(xb.z0, -xb.z1) * sq;
  return n;
}

PPState pp_step(const Params& p, const PPState& s, double dt,
                std::uint64_t seed, std::uint32_t traj, std::uint64_t step) {
  const PPState f = pp_drift(p, s);
  const NoiseIncrements n = sample_noise(p, s, dt, seed, traj, step);
  return {s.a1 + dt * f.a1 + n.r1, s.a2 + dt * f.a2 + n.r2,
          s.b1 + dt * f.b1 + n.s1, s.b2 + dt * f.b2 + n.s2};
}

namespace {

constexpr int kBlocks = 64;
using cplx = std::complex<double>;

double wrap_pi(double x) { return std::remainder(x, 2.0 * M_PI); }

// Per-snapshot raw sums for one accumulation block.  All deviation sums are
// complex: in the doubled phase space n_j = beta_j alpha_j and
// phi_j = (1/2i) log(alpha_j/beta_j) are complex, and the analytic
// correlators are quasi-averages of their complex products.
struct SnapSums {
  long cnt = 0;
  cplx n1{}, n2{}, a12{}, a1{}, a2{};
  cplx dnm{}, dnm2{}, wm{}, wm2{}, dnm_wm{};
  cplx dnp{}, dnp2{}, wp{}, wp2{}, dnp_wp{};
};

struct Block {
  std::vector<SnapSums> snaps;
  long divergent = 0;
  long traj = 0;
};

struct SnapValues {
  cplx n1{}, n2{}, a12{}, a1{}, a2{};
  cplx dnm{}, dnp{}, wm{}, wp{};
  bool has_dev = false;
};

void accumulate(SnapSums& s, const SnapValues& v) {
  ++s.cnt;
  s.n1 += v.n1;
  s.n2 += v.n2;
  s.a12 += v.a12;
  s.a1 += v.a1;
  s.a2 += v.a2;
  if (v.has_dev) {
    s.dnm += v.dnm;
    s.dnm2 += v.dnm * v.dnm;
    s.wm += v.wm;
    s.wm2 += v.wm * v.wm;
    s.dnm_wm += v.dnm * v.wm;
    s.dnp += v.dnp;
    s.dnp2 += v.dnp * v.dnp;
    s.wp += v.wp;
    s.wp2 += v.wp * v.wp;
    s.dnp_wp += v.dnp * v.wp;
  }
}

// Complex phase deviation of mode j about the locked phase phi0:
// delta phi = (1/2) wrap(arg(alpha/beta) - 2 phi0) - (i/2) ln|alpha/beta|.
// (exp(2 i phi) = alpha/beta fixes phi modulo pi; the branch nearest the
// reference is taken.)
cplx phase_dev(const cplx& a, const cplx& b, double phi0) {
  const cplx z = a / b;
  return {0.5 * wrap_pi(std::arg(z) - 2.0 * phi0), -0.5 * std::log(std::abs(z))};
}

}  // namespace

SdeResult run_ensemble(const Params& p, const SdeConfig& cfg) {
  validate(p);
  if (cfg.n_traj < 1 || !(cfg.dt > 0.0) || !(cfg.t_end > 0.0))
    throw std::invalid_argument("run_ensemble: bad trajectory/step settings");
  if (cfg.snapshots < 1 || cfg.avg_last < 1 || cfg.avg_last > cfg.snapshots)
    throw std::invalid_argument("run_ensemble: bad snapshot settings");

  const long nsteps = std::lround(cfg.t_end / cfg.dt);
  const int S = cfg.snapshots;
  std::vector<long> snap_step(S);
  for (int s = 0; s < S; ++s)
    snap_step[s] = std::lround(double(s + 1) * double(nsteps) / double(S));

  const SteadyState* ref = cfg.reference ? &*cfg.reference : nullptr;

  std::vector<Block> blocks(kBlocks);
  for (auto& b : blocks) b.snaps.resize(S);
  std::vector<std::pair<double, PPState>> traj0;

  auto run_block = [&](int bi) {
    Block& blk = blocks[bi];
    const long lo = bi * cfg.n_traj / kBlocks;
    const long hi = (bi + 1) * cfg.n_traj / kBlocks;
    std::vector<SnapValues> local(S);
    for (long tj = lo; tj < hi; ++tj) {
      PPState x = cfg.x0;
      bool alive = true;
      int si = 0;
      const bool record0 = (tj == 0 && cfg.record_stride > 0);
      if (record0) traj0.push_back({0.0, x});
      for (long n = 0; n < nsteps && alive; ++n) {
        x = pp_step(p, x, cfg.dt, cfg.seed, static_cast<std::uint32_t>(tj),
                    static_cast<std::uint64_t>(n));
        const double big =
            std::max(std::max(std::abs(x.a1), std::abs(x.a2)),
                     std::max(std::abs(x.b1), std::abs(x.b2)));
        if (!(big < cfg.escape_bound)) {
          alive = false;
          break;
        }
        if (record0 && ((n + 1) % cfg.record_stride == 0 || n + 1 == nsteps))
          traj0.push_back({(n + 1) * cfg.dt, x});
        if (si < S && n + 1 == snap_step[si]) {
          SnapValues& v = local[si];
          v.n1 = x.b1 * x.a1;
          v.n2 = x.b2 * x.a2;
          v.a12 = x.a1 * x.a2;
          v.a1 = x.a1;
          v.a2 = x.a2;
          v.has_dev = ref != nullptr;
          if (ref) {
            const cplx dn1 = v.n1 - ref->n0;
            const cplx dn2 = v.n2 - ref->n0;
            const cplx f1 = phase_dev(x.a1, x.b1, ref->phi1);
            const cplx f2 = phase_dev(x.a2, x.b2, ref->phi2);
            v.dnm = dn2 - dn1;
            v.dnp = dn2 + dn1;
            v.wm = f2 - f1;
            v.wp = f2 + f1;
          }
          ++si;
        }
      }
      if (alive) {
        ++blk.traj;
        for (int s = 0; s < S; ++s) accumulate(blk.snaps[s], local[s]);
      } else {
        ++blk.divergent;
      }
    }
  };

  const int nthreads = std::max(1, cfg.threads);
  if (nthreads == 1) {
    for (int b = 0; b < kBlocks; ++b) run_block(b);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (int w = 0; w < nthreads; ++w)
      pool.emplace_back([&, w] {
        for (int b = w; b < kBlocks; b += nthreads) run_block(b);
      });
    for (auto& th : pool) th.join();
  }

  // Sequential block reduction in fixed block order.
  SdeResult res;
  res.n_traj = cfg.n_traj;
  for (const auto& b : blocks) res.n_divergent += b.divergent;
  res.has_deviations = ref != nullptr;
  res.traj0 = std::move(traj0);

  std::vector<SnapSums> tot(S);
  for (int s = 0; s < S; ++s)
    for (const auto& b : blocks) {
      const SnapSums& q = b.snaps[s];
      tot[s].cnt += q.cnt;
      tot[s].n1 += q.n1;
      tot[s].n2 += q.n2;
      tot[s].a12 += q.a12;
      tot[s].a1 += q.a1;
      tot[s].a2 += q.a2;
      tot[s].dnm += q.dnm;
      tot[s].dnm2 += q.dnm2;
      tot[s].wm += q.wm;
      tot[s].wm2 += q.wm2;
      tot[s].dnm_wm += q.dnm_wm;
      tot[s].dnp += q.dnp;
      tot[s].dnp2 += q.dnp2;
      tot[s].wp += q.wp;
      tot[s].wp2 += q.wp2;
      tot[s].dnp_wp += q.dnp_wp;
    }

  res.snap_t.resize(S);
  res.snap_n1.resize(S);
  res.snap_n2.resize(S);
  for (int s = 0; s < S; ++s) {
    res.snap_t[s] = snap_step[s] * cfg.dt;
    const double c = std::max<long>(tot[s].cnt, 1);
    res.snap_n1[s] = (tot[s].n1 / c).real();
    res.snap_n2[s] = (tot[s].n2 / c).real();
  }

  const int s0 = S - cfg.avg_last;

  auto cmean = [](const SnapSums& s, cplx SnapSums::*f) {
    return s.cnt ? (s.*f) / double(s.cnt) : cplx{};
  };
  // Central complex second moment <x y> - <x><y> of a snapshot record.
  auto cmoment = [&](const SnapSums& s, cplx SnapSums::*sx, cplx SnapSums::*sy,
                     cplx SnapSums::*sxy) {
    if (!s.cnt) return cplx{};
    return cmean(s, sxy) - cmean(s, sx) * cmean(s, sy);
  };

  // Average a per-snapshot statistic over the last avg_last snapshots; the
  // standard error is the spread of the same statistic across blocks.
  auto reduce = [&](auto&& stat) {
    CEstimate e;
    cplx acc{};
    for (int s = s0; s < S; ++s) acc += stat(tot[s]);
    e.value = acc / double(cfg.avg_last);
    double vr = 0, vi = 0;
    int nb = 0;
    for (const auto& b : blocks) {
      if (!b.traj) continue;
      cplx ab{};
      for (int s = s0; s < S; ++s) ab += stat(b.snaps[s]);
      ab /= double(cfg.avg_last);
      vr += (ab.real() - e.value.real()) * (ab.real() - e.value.real());
      vi += (ab.imag() - e.value.imag()) * (ab.imag() - e.value.imag());
      ++nb;
    }
    if (nb > 1) {
      e.se_re = std::sqrt(vr / (nb - 1) / nb);
      e.se_im = std::sqrt(vi / (nb - 1) / nb);
    }
    return e;
  };

  auto mean_field = [&](cplx SnapSums::*f) {
    return reduce([&](const SnapSums& s) { return cmean(s, f); });
  };
  res.n1 = mean_field(&SnapSums::n1);
  res.n2 = mean_field(&SnapSums::n2);
  res.a12 = mean_field(&SnapSums::a12);
  res.a1 = mean_field(&SnapSums::a1);
  res.a2 = mean_field(&SnapSums::a2);
  if (ref) {
    res.var_dn_minus = reduce([&](const SnapSums& s) {
      return cmoment(s, &SnapSums::dnm, &SnapSums::dnm, &SnapSums::dnm2);
    });
    res.var_dphi_minus = reduce([&](const SnapSums& s) {
      return cmoment(s, &SnapSums::wm, &SnapSums::wm, &SnapSums::wm2);
    });
    res.cov_dn_dphi_minus = reduce([&](const SnapSums& s) {
      return cmoment(s, &SnapSums::dnm, &SnapSums::wm, &SnapSums::dnm_wm);
    });
    res.var_dn_plus = reduce([&](const SnapSums& s) {
      return cmoment(s, &SnapSums::dnp, &SnapSums::dnp, &SnapSums::dnp2);
    });
    res.var_dphi_plus = reduce([&](const SnapSums& s) {
      return cmoment(s, &SnapSums::wp, &SnapSums::wp, &SnapSums::wp2);
    });
    res.cov_dn_dphi_plus = reduce([&](const SnapSums& s) {
      return cmoment(s, &SnapSums::dnp, &SnapSums::wp, &SnapSums::dnp_wp);
    });
  }
  return res;
}

}  // namespace nopo
