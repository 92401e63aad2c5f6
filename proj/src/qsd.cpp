#include "nopo/qsd.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <thread>

#include "nopo/hash.hpp"
#include "nopo/rng.hpp"

namespace nopo {

using cplx = std::complex<double>;

double DensityMatrix::trace_real() const {
  double t = 0.0;
  for (int i = 0; i < dim; ++i) t += at(i, i).real();
  return t;
}

namespace {
constexpr char kMagic[8] = {'N', 'O', 'P', 'O', 'D', 'M', '0', '1'};
}

void DensityMatrix::save(const std::filesystem::path& path) const {
  std::string buf;
  buf.append(kMagic, 8);
  const std::uint32_t d32 = static_cast<std::uint32_t>(dim);
  const std::uint64_t nt = static_cast<std::uint64_t>(n_traj);
  buf.append(reinterpret_cast<const char*>(&d32), 4);
  buf.append(reinterpret_cast<const char*>(&nt), 8);
  buf.append(reinterpret_cast<const char*>(m.data()),
             m.size() * sizeof(cplx));
  const auto digest = sha256_bytes(buf.data(), buf.size());
  buf.append(reinterpret_cast<const char*>(digest.data()), digest.size());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("DensityMatrix::save: cannot open " +
                                   path.string());
  f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

DensityMatrix DensityMatrix::load(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("DensityMatrix::load: cannot open " +
                                   path.string());
  std::string buf((std::istreambuf_iterator<char>(f)),
                  std::istreambuf_iterator<char>());
  if (buf.size() < 8 + 4 + 8 + 32 || std::memcmp(buf.data(), kMagic, 8) != 0)
    throw std::runtime_error("DensityMatrix::load: bad header");
  const std::size_t payload = buf.size() - 32;
  const auto digest = sha256_bytes(buf.data(), payload);
  if (std::memcmp(digest.data(), buf.data() + payload, 32) != 0)
    throw std::runtime_error("DensityMatrix::load: checksum mismatch");
  DensityMatrix r;
  std::uint32_t d32 = 0;
  std::uint64_t nt = 0;
  std::memcpy(&d32, buf.data() + 8, 4);
  std::memcpy(&nt, buf.data() + 12, 8);
  r.dim = static_cast<int>(d32);
  r.n_traj = static_cast<long>(nt);
  const std::size_t count = std::size_t(r.dim) * r.dim;
  if (payload != 20 + count * sizeof(cplx))
    throw std::runtime_error("DensityMatrix::load: size mismatch");
  r.m.resize(count);
  std::memcpy(r.m.data(), buf.data() + 20, count * sizeof(cplx));
  return r;
}

DensityMatrix reduce_mode(const DensityMatrix& rho12, int n1, int n2,
                          int keep_mode) {
  if (rho12.dim != n1 * n2)
    throw std::invalid_argument("reduce_mode: dimension mismatch");
  if (keep_mode != 1 && keep_mode != 2)
    throw std::invalid_argument("reduce_mode: keep_mode must be 1 or 2");
  DensityMatrix r;
  r.dim = keep_mode == 1 ? n1 : n2;
  r.n_traj = rho12.n_traj;
  r.m.assign(std::size_t(r.dim) * r.dim, cplx{});
  for (int i = 0; i < r.dim; ++i)
    for (int j = 0; j < r.dim; ++j) {
      cplx acc{};
      if (keep_mode == 1)
        for (int k = 0; k < n2; ++k) acc += rho12.at(i * n2 + k, j * n2 + k);
      else
        for (int k = 0; k < n1; ++k) acc += rho12.at(k * n2 + i, k * n2 + j);
      r.at(i, j) = acc;
    }
  return r;
}

namespace {

// Scratch buffers for one trajectory; psi is padded by n2+1 zeros on both
// sides so every band gather is branch-free (coefficients are zero wherever
// a read would cross a row boundary).
struct Work {
  int dim = 0, pad = 0;
  std::vector<cplx> psi;  // size dim + 2*pad
  std::vector<cplx> v, g1, g2, g3;

  void init(const EffectiveModel& m) {
    dim = m.dim();
    pad = m.n2 + 1;
    psi.assign(dim + 2 * pad, cplx{});
    v.resize(dim);
    g1.resize(dim);
    g2.resize(dim);
    g3.resize(dim);
  }
  cplx* state() { return psi.data() + pad; }
  const cplx* state() const { return psi.data() + pad; }
};

// One unravelling step on pre-normalized psi; returns the new norm before
// renormalization.
double step_kernel(const EffectiveModel& m, Work& w, double dt,
                   std::uint64_t seed, std::uint32_t traj,
                   std::uint64_t step) {
  const int dim = w.dim, n2 = m.n2;
  cplx* psi = w.state();
  cplx e1{}, e2{}, e3{};
  for (int i = 0; i < dim; ++i) {
    const cplx lo1 = psi[i - n2 + 1], hi1 = psi[i + n2 - 1];
    const cplx lo2 = psi[i - n2 - 1], hi2 = psi[i + n2 + 1];
    const cplx band = m.chi_lo[i] * lo1 + m.chi_hi[i] * hi1;
    w.v[i] = m.diag[i] * psi[i] + cplx(band.imag(), -band.real())  // -i*band
             + m.eps_lo[i] * lo2 - m.eps_hi[i] * hi2;
    const cplx j1 = m.l1[i] * psi[i + n2];
    const cplx j2 = m.l2[i] * psi[i + 1];
    const cplx j3 = m.l3[i] * hi2;  // same read as eps_hi band
    w.g1[i] = j1;
    w.g2[i] = j2;
    w.g3[i] = j3;
    const cplx pc = std::conj(psi[i]);
    e1 += pc * j1;
    e2 += pc * j2;
    e3 += pc * j3;
  }
  const double hdt = std::sqrt(0.5 * dt);
  const auto x1 = rng::normal_pair(seed, traj, step, 0);
  const auto x2 = rng::normal_pair(seed, traj, step, 1);
  const auto x3 = rng::normal_pair(seed, traj, step, 2);
  const cplx dxi1(hdt * x1.z0, hdt * x1.z1);
  const cplx dxi2(hdt * x2.z0, hdt * x2.z1);
  const cplx dxi3(hdt * x3.z0, hdt * x3.z1);
  const cplx A = 1.0 -
                 0.5 * dt * (std::norm(e1) + std::norm(e2) + std::norm(e3)) -
                 (e1 * dxi1 + e2 * dxi2 + e3 * dxi3);
  const cplx c1 = std::conj(e1) * dt + dxi1;
  const cplx c2 = std::conj(e2) * dt + dxi2;
  const cplx c3 = std::conj(e3) * dt + dxi3;
  double norm2 = 0.0;
  for (int i = 0; i < dim; ++i) {
    const cplx np = A * psi[i] + dt * w.v[i] + c1 * w.g1[i] + c2 * w.g2[i] +
                    c3 * w.g3[i];
    psi[i] = np;
    norm2 += std::norm(np);
  }
  const double norm = std::sqrt(norm2);
  const double inv = 1.0 / norm;
  for (int i = 0; i < dim; ++i) psi[i] *= inv;
  return norm;
}

struct Obs {
  cplx a1{}, a2{}, a12{}, a1d_a2{}, a1sq{}, a2sq{};
  double n1 = 0, n2 = 0, top1 = 0, top2 = 0;
};

Obs observe(const EffectiveModel& m, const cplx* psi) {
  Obs o;
  const int N1 = m.n1, N2 = m.n2;
  auto at = [&](int i1, int i2) { return psi[i1 * N2 + i2]; };
  for (int i1 = 0; i1 < N1; ++i1)
    for (int i2 = 0; i2 < N2; ++i2) {
      const cplx pc = std::conj(at(i1, i2));
      const double pop = std::norm(at(i1, i2));
      o.n1 += i1 * pop;
      o.n2 += i2 * pop;
      if (i1 >= N1 - 2) o.top1 += pop;
      if (i2 >= N2 - 2) o.top2 += pop;
      if (i1 + 1 < N1) o.a1 += pc * std::sqrt(double(i1 + 1)) * at(i1 + 1, i2);
      if (i2 + 1 < N2) o.a2 += pc * std::sqrt(double(i2 + 1)) * at(i1, i2 + 1);
      if (i1 + 1 < N1 && i2 + 1 < N2)
        o.a12 += pc * std::sqrt(double(i1 + 1) * (i2 + 1)) * at(i1 + 1, i2 + 1);
      if (i1 >= 1 && i2 + 1 < N2)
        o.a1d_a2 += pc * std::sqrt(double(i1) * (i2 + 1)) * at(i1 - 1, i2 + 1);
      if (i1 + 2 < N1)
        o.a1sq += pc * std::sqrt(double((i1 + 1) * (i1 + 2))) * at(i1 + 2, i2);
      if (i2 + 2 < N2)
        o.a2sq += pc * std::sqrt(double((i2 + 1) * (i2 + 2))) * at(i1, i2 + 2);
    }
  return o;
}

constexpr int kBlocks = 8;

struct SnapSums {
  long cnt = 0;
  cplx a1{}, a2{}, a12{}, a1d_a2{}, a1sq{}, a2sq{};
  double n1 = 0, n2 = 0;
};

struct Block {
  std::vector<SnapSums> snaps;
  std::vector<cplx> rho1, rho2, rho12;
  long flagged = 0;
  long traj = 0;
  double log_norm = 0.0;
};

}  // namespace

double qsd_step(const EffectiveModel& m, std::vector<cplx>& psi, double dt,
                std::uint64_t seed, std::uint32_t traj, std::uint64_t step) {
  if (static_cast<int>(psi.size()) != m.dim())
    throw std::invalid_argument("qsd_step: psi has wrong dimension");
  double n2 = 0.0;
  for (const cplx& c : psi) n2 += std::norm(c);
  if (std::abs(std::sqrt(n2) - 1.0) > 1e-8)
    throw std::invalid_argument("qsd_step: psi must be normalized");
  Work w;
  w.init(m);
  std::copy(psi.begin(), psi.end(), w.state());
  const double norm = step_kernel(m, w, dt, seed, traj, step);
  std::copy(w.state(), w.state() + m.dim(), psi.begin());
  return norm;
}

QsdResult run_qsd_ensemble(const EffectiveModel& m, const QsdConfig& cfg) {
  const Params& p = m.params;
  validate(p);
  if (cfg.n_traj < 1 || !(cfg.dt > 0.0) || !(cfg.t_end > 0.0))
    throw std::invalid_argument("run_qsd_ensemble: bad trajectory settings");
  if (cfg.snapshots < 1 || cfg.avg_last < 1 || cfg.avg_last > cfg.snapshots)
    throw std::invalid_argument("run_qsd_ensemble: bad snapshot settings");
  if (cfg.init_n1 < 0 || cfg.init_n1 >= m.n1 || cfg.init_n2 < 0 ||
      cfg.init_n2 >= m.n2)
    throw std::invalid_argument("run_qsd_ensemble: initial Fock state outside truncation");
  const double rate =
      std::max({p.gamma1, p.gamma2, std::abs(p.delta1), std::abs(p.delta2),
                p.chi, p.eps(), p.lambda() * std::max(m.n1, m.n2)});
  if (cfg.dt * rate > 1e-3 * (1.0 + 1e-9))
    throw std::invalid_argument(
        "run_qsd_ensemble: dt too large for the fastest rate (need dt <= "
        "1e-3/max rate)");

  const long nsteps = std::lround(cfg.t_end / cfg.dt);
  const int S = cfg.snapshots;
  std::vector<long> snap_step(S);
  for (int s = 0; s < S; ++s)
    snap_step[s] = std::lround(double(s + 1) * double(nsteps) / double(S));
  const int s0 = S - cfg.avg_last;
  const int dim = m.dim();

  const bool want_red = cfg.rho != QsdConfig::Rho::none;
  const bool want_full = cfg.rho == QsdConfig::Rho::full;
  if (want_full && dim > 1200)
    throw std::invalid_argument(
        "run_qsd_ensemble: full two-mode density matrix limited to dim <= 1200");

  std::vector<Block> blocks(kBlocks);
  for (auto& b : blocks) {
    b.snaps.resize(S);
    if (want_red) {
      b.rho1.assign(std::size_t(m.n1) * m.n1, cplx{});
      b.rho2.assign(std::size_t(m.n2) * m.n2, cplx{});
    }
    if (want_full) b.rho12.assign(std::size_t(dim) * dim, cplx{});
  }
  std::vector<std::array<double, 3>> traj0;

  auto run_block = [&](int bi) {
    Block& blk = blocks[bi];
    const long lo = bi * cfg.n_traj / kBlocks;
    const long hi = (bi + 1) * cfg.n_traj / kBlocks;
    Work w;
    w.init(m);
    for (long tj = lo; tj < hi; ++tj) {
      std::fill(w.psi.begin(), w.psi.end(), cplx{});
      w.state()[cfg.init_n1 * m.n2 + cfg.init_n2] = 1.0;
      const bool record0 = (tj == 0 && cfg.record_stride > 0);
      if (record0) {
        const Obs o = observe(m, w.state());
        traj0.push_back({0.0, o.n1, o.n2});
      }
      int si = 0;
      double top1 = 0.0, top2 = 0.0;
      for (long n = 0; n < nsteps; ++n) {
        const double norm =
            step_kernel(m, w, cfg.dt, cfg.seed, static_cast<std::uint32_t>(tj),
                        static_cast<std::uint64_t>(n));
        blk.log_norm += std::log(norm);
        const bool at_snap = (si < S && n + 1 == snap_step[si]);
        const bool at_rec =
            record0 && ((n + 1) % cfg.record_stride == 0 || n + 1 == nsteps);
        if (at_snap || at_rec) {
          const Obs o = observe(m, w.state());
          if (at_rec) traj0.push_back({(n + 1) * cfg.dt, o.n1, o.n2});
          if (at_snap) {
            top1 = std::max(top1, o.top1);
            top2 = std::max(top2, o.top2);
            SnapSums& s = blk.snaps[si];
            ++s.cnt;
            s.a1 += o.a1;
            s.a2 += o.a2;
            s.a12 += o.a12;
            s.a1d_a2 += o.a1d_a2;
            s.a1sq += o.a1sq;
            s.a2sq += o.a2sq;
            s.n1 += o.n1;
            s.n2 += o.n2;
            if (si >= s0) {
              const cplx* psi = w.state();
              if (want_red) {
                for (int i1 = 0; i1 < m.n1; ++i1)
                  for (int j1 = 0; j1 < m.n1; ++j1) {
                    cplx acc{};
                    for (int k = 0; k < m.n2; ++k)
                      acc += psi[i1 * m.n2 + k] * std::conj(psi[j1 * m.n2 + k]);
                    blk.rho1[std::size_t(i1) * m.n1 + j1] += acc;
                  }
                for (int i2 = 0; i2 < m.n2; ++i2)
                  for (int j2 = 0; j2 < m.n2; ++j2) {
                    cplx acc{};
                    for (int k = 0; k < m.n1; ++k)
                      acc += psi[k * m.n2 + i2] * std::conj(psi[k * m.n2 + j2]);
                    blk.rho2[std::size_t(i2) * m.n2 + j2] += acc;
                  }
              }
              if (want_full) {
                for (int i = 0; i < dim; ++i) {
                  const cplx pi = psi[i];
                  cplx* row = blk.rho12.data() + std::size_t(i) * dim;
                  for (int j = 0; j < dim; ++j)
                    row[j] += pi * std::conj(psi[j]);
                }
              }
            }
            ++si;
          }
        }
      }
      ++blk.traj;
      if (top1 > cfg.trunc_tol || top2 > cfg.trunc_tol) ++blk.flagged;
    }
  };

  const int nthreads = std::max(1, cfg.threads);
  if (nthreads == 1) {
    for (int b = 0; b < kBlocks; ++b) run_block(b);
  } else {
    std::vector<std::thread> pool;
    for (int wk = 0; wk < nthreads; ++wk)
      pool.emplace_back([&, wk] {
        for (int b = wk; b < kBlocks; b += nthreads) run_block(b);
      });
    for (auto& th : pool) th.join();
  }

  QsdResult res;
  res.n_traj = cfg.n_traj;
  for (const auto& b : blocks) res.n_flagged += b.flagged;
  res.flagged = res.n_flagged * 100 > cfg.n_traj;
  res.traj0 = std::move(traj0);
  {
    double ln = 0.0;
    for (const auto& b : blocks) ln += b.log_norm;
    res.mean_log_norm_per_step = ln / (double(nsteps) * double(cfg.n_traj));
  }

  std::vector<SnapSums> tot(S);
  for (int s = 0; s < S; ++s)
    for (const auto& b : blocks) {
      const SnapSums& q = b.snaps[s];
      tot[s].cnt += q.cnt;
      tot[s].a1 += q.a1;
      tot[s].a2 += q.a2;
      tot[s].a12 += q.a12;
      tot[s].a1d_a2 += q.a1d_a2;
      tot[s].a1sq += q.a1sq;
      tot[s].a2sq += q.a2sq;
      tot[s].n1 += q.n1;
      tot[s].n2 += q.n2;
    }

  res.snap_t.resize(S);
  res.snap_n1.resize(S);
  res.snap_n2.resize(S);
  for (int s = 0; s < S; ++s) {
    res.snap_t[s] = snap_step[s] * cfg.dt;
    const double c = std::max<long>(tot[s].cnt, 1);
    res.snap_n1[s] = tot[s].n1 / c;
    res.snap_n2[s] = tot[s].n2 / c;
  }

  auto reduce = [&](auto&& get) {
    CMoment e;
    cplx acc{};
    for (int s = s0; s < S; ++s)
      acc += get(tot[s]) / double(std::max<long>(tot[s].cnt, 1));
    e.value = acc / double(cfg.avg_last);
    double vr = 0, vi = 0;
    int nb = 0;
    for (const auto& b : blocks) {
      if (!b.traj) continue;
      cplx ab{};
      for (int s = s0; s < S; ++s)
        ab += get(b.snaps[s]) / double(std::max<long>(b.snaps[s].cnt, 1));
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
  res.a1 = reduce([](const SnapSums& s) { return s.a1; });
  res.a2 = reduce([](const SnapSums& s) { return s.a2; });
  res.a12 = reduce([](const SnapSums& s) { return s.a12; });
  res.a1d_a2 = reduce([](const SnapSums& s) { return s.a1d_a2; });
  res.a1_sq = reduce([](const SnapSums& s) { return s.a1sq; });
  res.a2_sq = reduce([](const SnapSums& s) { return s.a2sq; });
  res.n1 = reduce([](const SnapSums& s) { return cplx(s.n1, 0.0); });
  res.n2 = reduce([](const SnapSums& s) { return cplx(s.n2, 0.0); });

  const double denom = double(cfg.n_traj) * double(cfg.avg_last);
  auto pack_rho = [&](int d, std::vector<cplx> Block::*field) {
    DensityMatrix r;
    r.dim = d;
    r.n_traj = cfg.n_traj * cfg.avg_last;
    r.m.assign(std::size_t(d) * d, cplx{});
    for (const auto& b : blocks)
      for (std::size_t i = 0; i < r.m.size(); ++i) r.m[i] += (b.*field)[i];
    for (auto& c : r.m) c /= denom;
    return r;
  };
  if (want_red) {
    res.rho1 = pack_rho(m.n1, &Block::rho1);
    res.rho2 = pack_rho(m.n2, &Block::rho2);
  }
  if (want_full) res.rho12 = pack_rho(dim, &Block::rho12);
  return res;
}

double duan_variance(const PairMoments& m, double theta1, double theta2) {
  const cplx e1 = std::exp(cplx(0.0, theta1));
  const cplx e2 = std::exp(cplx(0.0, theta2));
  const cplx z = e1 * m.a1 - e2 * m.a2;
  const cplx w = e1 * m.a1 + e2 * m.a2;
  const double re_z = z.real(), im_w = w.imag();
  return 1.0 + m.n1.real() + m.n2.real() -
         2.0 * std::real(e1 * e2 * m.a12) - re_z * re_z - im_w * im_w;
}

DuanResult duan_minimize(const PairMoments& m, double base_theta1,
                         double base_theta2, int n_scan) {
  DuanResult best;
  best.V = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_scan; ++i) {
    // One common offset on both phases; period pi (the correlation term has
    // period pi in the offset and the mean terms are sign-invariant).
    const double off = M_PI * i / double(n_scan);
    const double v = duan_variance(m, base_theta1 + off, base_theta2 + off);
    if (v < best.V) {
      best.V = v;
      best.theta1 = base_theta1 + off;
      best.theta2 = base_theta2 + off;
    }
  }
  return best;
}

PairMoments pair_moments_from_rho(const DensityMatrix& rho12, int n1, int n2) {
  if (rho12.dim != n1 * n2)
    throw std::invalid_argument("pair_moments_from_rho: dimension mismatch");
  PairMoments m;
  auto idx = [n2](int i1, int i2) { return i1 * n2 + i2; };
  for (int i1 = 0; i1 < n1; ++i1)
    for (int i2 = 0; i2 < n2; ++i2) {
      const double pop = rho12.at(idx(i1, i2), idx(i1, i2)).real();
      m.n1 += i1 * pop;
      m.n2 += i2 * pop;
      if (i1 >= 1)
        m.a1 += std::sqrt(double(i1)) * rho12.at(idx(i1, i2), idx(i1 - 1, i2));
      if (i2 >= 1)
        m.a2 += std::sqrt(double(i2)) * rho12.at(idx(i1, i2), idx(i1, i2 - 1));
      if (i1 >= 1 && i2 >= 1)
        m.a12 += std::sqrt(double(i1) * i2) *
                 rho12.at(idx(i1, i2), idx(i1 - 1, i2 - 1));
    }
  return m;
}

PairMoments pair_moments(const QsdResult& r) {
  PairMoments m;
  m.a1 = r.a1.value;
  m.a2 = r.a2.value;
  m.n1 = r.n1.value;
  m.n2 = r.n2.value;
  m.a12 = r.a12.value;
  return m;
}

}  // namespace nopo
