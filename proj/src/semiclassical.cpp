#include "nopo/semiclassical.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nopo {

CState drift(const Params& p, const CState& s) {
  const std::complex<double> i(0.0, 1.0);
  const double eps = p.eps(), lam = p.lambda();
  const std::complex<double> d = eps - lam * s.a1 * s.a2;
  CState out;
  out.a1 = -(p.gamma1 + i * p.delta1) * s.a1 + d * std::conj(s.a2) - i * p.chi * s.a2;
  out.a2 = -(p.gamma2 + i * p.delta2) * s.a2 + d * std::conj(s.a1) - i * p.chi * s.a1;
  return out;
}

Trajectory integrate(const Params& p, CState x0, double t_end, double dt,
                     int record_stride, double escape_bound) {
  validate(p);
  if (!(dt > 0.0) || !(t_end > 0.0))
    throw std::invalid_argument("integrate: dt and t_end must be > 0");
  const double fastest =
      std::max({p.gamma1, p.gamma2, std::abs(p.delta1) + p.chi,
                std::abs(p.delta2) + p.chi, p.eps()});
  if (dt * fastest > 0.01)
    throw std::invalid_argument(
        "integrate: dt too large, require dt <= 0.01/max(gamma, |delta|+chi, "
        "eps)");
  if (record_stride < 1)
    throw std::invalid_argument("integrate: record_stride must be >= 1");
  const long nsteps = std::lround(t_end / dt);

  Trajectory tr;
  tr.dt = dt;
  tr.t.reserve(nsteps / record_stride + 2);
  tr.x.reserve(nsteps / record_stride + 2);
  tr.t.push_back(0.0);
  tr.x.push_back(x0);

  CState x = x0;
  for (long n = 0; n < nsteps; ++n) {
    const CState k1 = drift(p, x);
    const CState k2 = drift(p, {x.a1 + 0.5 * dt * k1.a1, x.a2 + 0.5 * dt * k1.a2});
    const CState k3 = drift(p, {x.a1 + 0.5 * dt * k2.a1, x.a2 + 0.5 * dt * k2.a2});
    const CState k4 = drift(p, {x.a1 + dt * k3.a1, x.a2 + dt * k3.a2});
    x.a1 += dt / 6.0 * (k1.a1 + 2.0 * k2.a1 + 2.0 * k3.a1 + k4.a1);
    x.a2 += dt / 6.0 * (k1.a2 + 2.0 * k2.a2 + 2.0 * k3.a2 + k4.a2);
    if (std::abs(x.a1) > escape_bound || std::abs(x.a2) > escape_bound) {
      std::ostringstream msg;
      msg << "integrate: trajectory escaped |alpha| > " << escape_bound
          << " at t = " << (n + 1) * dt;
      throw std::runtime_error(msg.str());
    }
    if ((n + 1) % record_stride == 0 || n + 1 == nsteps) {
      tr.t.push_back((n + 1) * dt);
      tr.x.push_back(x);
    }
  }
  return tr;
}

PulsingDiagnosis diagnose_pulsing(const Trajectory& tr) {
  PulsingDiagnosis d;
  const std::size_t total = tr.t.size();
  if (total < 64) return d;  // undecided: record too short

  // Retain the second half (transient discard).
  const std::size_t start = total / 2;
  const std::size_t n = total - start;
  std::vector<double> sig(n);
  for (std::size_t i = 0; i < n; ++i) sig[i] = std::norm(tr.x[start + i].a1);
  const double tspan = tr.t.back() - tr.t[start];

  double mean = 0.0;
  for (double v : sig) mean += v;
  mean /= static_cast<double>(n);
  for (double& v : sig) v -= mean;

  // Late-time relative span over the last quarter of the full record.
  {
    const std::size_t q = total - total / 4;
    double lo = std::norm(tr.x[q].a1), hi = lo;
    for (std::size_t i = q; i < total; ++i) {
      const double v = std::norm(tr.x[i].a1);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double scale = std::max(std::abs(hi), 1e-300);
    d.late_span = (hi - lo) / scale;
  }

  // Power spectrum of the retained record.
  std::vector<double> in(sig);
  std::vector<double> power(n / 2 + 1);
  {
    std::vector<std::complex<double>> out(n / 2 + 1);
    fftw_plan plan = fftw_plan_dft_r2c_1d(
        static_cast<int>(n), in.data(),
        reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    for (std::size_t i = 0; i < power.size(); ++i) power[i] = std::norm(out[i]);
  }

  // Dominant nonzero-frequency peak vs the median background (DC excluded).
  std::size_t kpeak = 1;
  for (std::size_t i = 2; i < power.size(); ++i)
    if (power[i] > power[kpeak]) kpeak = i;
  std::vector<double> bg(power.begin() + 1, power.end());
  std::nth_element(bg.begin(), bg.begin() + bg.size() / 2, bg.end());
  const double median = std::max(bg[bg.size() / 2], 1e-300);
  d.peak_ratio = power[kpeak] / median;

  const double f_peak = static_cast<double>(kpeak) / tspan;
  const double periods_covered = tspan * f_peak;  // = kpeak

  if (d.late_span < 1e-6) {
    d.kind = PulsingDiagnosis::Kind::fixed_point;
  } else if (d.peak_ratio > 10.0 && periods_covered >= 20.0) {
    d.kind = PulsingDiagnosis::Kind::periodic;
    d.period = 1.0 / f_peak;
  }
  return d;
}

namespace {
// Linearization of the full (alpha, beta) system at the origin:
// d/dt (da1,da2,db1,db2) = -F (da1,da2,db1,db2), F = [[A, -B], [-conj(B), conj(A)]]
// with A = [[g1+i d1, i chi], [i chi, g2+i d2]], B = eps sigma_x.
Eigen::Matrix4cd minus_F(const Params& p) {
  const std::complex<double> i(0.0, 1.0);
  Eigen::Matrix2cd A, B;
  A << p.gamma1 + i * p.delta1, i * p.chi, i * p.chi, p.gamma2 + i * p.delta2;
  B << 0.0, p.eps(), p.eps(), 0.0;
  Eigen::Matrix4cd F;
  F.topLeftCorner<2, 2>() = A;
  F.topRightCorner<2, 2>() = -B;
  F.bottomLeftCorner<2, 2>() = -B.conjugate();
  F.bottomRightCorner<2, 2>() = A.conjugate();
  return -F;
}
}  // namespace

Eigen::Vector4cd origin_growth_rates(const Params& p) {
  validate(p);
  Eigen::ComplexEigenSolver<Eigen::Matrix4cd> es(minus_F(p), false);
  return es.eigenvalues();
}

double growth_threshold_eps(const Params& p, double eps_lo, double eps_hi,
                            double tol) {
  auto rate = [&p](double eps) {
    Params q = p;
    q.k = std::sqrt(q.lambda() * q.gamma3);
    q.E = (q.k > 0.0) ? eps * q.gamma3 / q.k : 0.0;
    if (q.k == 0.0) {  // lambda 0: drive the linear system directly
      q.k = 1.0;
      q.E = eps * q.gamma3;
    }
    return origin_growth_rates(q).real().maxCoeff();
  };
  double lo = eps_lo, hi = eps_hi;
  double rlo = rate(lo), rhi = rate(hi);
  if (rlo > 0.0 || rhi < 0.0)
    throw std::invalid_argument(
        "growth_threshold_eps: bracket does not straddle the instability");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (rate(mid) > 0.0)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

Eigen::Matrix4d jacobian(const Params& p, const CState& s) {
  // Central differences on the 4 real coordinates.
  const double scale = std::max({std::abs(s.a1), std::abs(s.a2), 1.0});
  const double h = 1e-6 * scale;
  auto pack = [](const CState& c, double* v) {
    v[0] = c.a1.real();
    v[1] = c.a1.imag();
    v[2] = c.a2.real();
    v[3] = c.a2.imag();
  };
  auto unpack = [](const double* v) {
    return CState{{v[0], v[1]}, {v[2], v[3]}};
  };
  double x0[4];
  pack(s, x0);
  Eigen::Matrix4d J;
  for (int j = 0; j < 4; ++j) {
    double xp[4], xm[4];
    std::copy(x0, x0 + 4, xp);
    std::copy(x0, x0 + 4, xm);
    xp[j] += h;
    xm[j] -= h;
    const CState fp = drift(p, unpack(xp)), fm = drift(p, unpack(xm));
    double vp[4], vm[4];
    pack(fp, vp);
    pack(fm, vm);
    for (int i = 0; i < 4; ++i) J(i, j) = (vp[i] - vm[i]) / (2.0 * h);
  }
  return J;
}

double max_growth_rate(const Params& p, const CState& s) {
  Eigen::EigenSolver<Eigen::Matrix4d> es(jacobian(p, s), false);
  return es.eigenvalues().real().maxCoeff();
}

}  // namespace nopo
