// Positive-P integration: noise-correlator statistics, exact special
// cases, stationary moments against the linearized statics, determinism,
// and divergence handling.
#include <cmath>
#include <complex>
#include <cstring>

#include "doctest.h"
#include "nopo/sde.hpp"
#include "nopo/spectrum.hpp"

using namespace nopo;
using std::complex;

TEST_CASE("sde: noise increments realize the displayed correlations") {
  // <R1 R2> = (eps - lambda a1 a2) dt; all self- and cross-sector second
  // moments vanish.  Checked at a state with complex noise strength.
  const Params p = make_params(1.0, 0.5, 0.5, 0.3, 2.0, 0.2);
  PPState s;
  s.a1 = {1.3, -0.4};
  s.a2 = {-0.2, 0.9};
  s.b1 = {0.6, 0.1};
  s.b2 = {0.4, -0.7};
  const double dt = 1e-3;
  const complex<double> ga = p.eps() - p.lambda() * s.a1 * s.a2;
  const complex<double> gb = p.eps() - p.lambda() * s.b1 * s.b2;

  const std::size_t n = 400000;
  complex<double> r12 = 0, r11 = 0, r22 = 0, s12 = 0, rs = 0, r1cr2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const NoiseIncrements w =
        sample_noise(p, s, dt, 99, static_cast<std::uint32_t>(i), 0);
    r12 += w.r1 * w.r2;
    r11 += w.r1 * w.r1;
    r22 += w.r2 * w.r2;
    s12 += w.s1 * w.s2;
    rs += w.r1 * w.s1;
    r1cr2 += w.r1 * std::conj(w.r2);
  }
  const double N = static_cast<double>(n);
  // Var(Re r1 r2) ~ |g|^2 dt^2 per sample; 5 sigma gates.
  const double se = 5.0 * std::abs(ga) * dt / std::sqrt(N);
  CHECK(std::abs(r12 / N - ga * dt) < 2.0 * se);
  CHECK(std::abs(s12 / N - gb * dt) < 2.0 * se);
  CHECK(std::abs(r11 / N) < 2.0 * se);
  CHECK(std::abs(r22 / N) < 2.0 * se);
  CHECK(std::abs(rs / N) < 2.0 * se);       // alpha/beta sectors independent
  CHECK(std::abs(r1cr2 / N) < 2.0 * se);    // no conjugate-pair correlation
}

TEST_CASE("sde: undriven vacuum is exactly stationary") {
  Params p = make_params(1.0, 2.0, 2.0, 0.4, 1.0, 0.1);
  p.E = 0.0;  // eps = 0, vacuum noise strength vanishes at the origin
  PPState s{};
  for (std::uint64_t k = 0; k < 50; ++k) s = pp_step(p, s, 1e-3, 7, 0, k);
  CHECK(s.a1 == complex<double>(0.0, 0.0));
  CHECK(s.a2 == complex<double>(0.0, 0.0));
  CHECK(s.b1 == complex<double>(0.0, 0.0));
  CHECK(s.b2 == complex<double>(0.0, 0.0));
}

TEST_CASE("sde: stationary moments match the linearized statics") {
  // Below threshold at small lambda the full ensemble reproduces
  // <da1 db1> = 1/6 and <da1 da2> = 1/3 of the degenerate-limit statics.
  const Params p = make_params(1.0, 0.0, 0.0, 0.0, 0.5, 0.02);
  SdeConfig cfg;
  cfg.n_traj = 4000;
  cfg.dt = 1e-3;
  cfg.t_end = 12.0;
  cfg.seed = 12;
  cfg.threads = 2;
  const SdeResult r = run_ensemble(p, cfg);
  CHECK(r.n_divergent == 0);
  CHECK(std::abs(r.n1.value.real() - 1.0 / 6.0) < 5.0 * r.n1.se_re);
  CHECK(std::abs(r.n2.value.real() - 1.0 / 6.0) < 5.0 * r.n2.se_re);
  CHECK(std::abs(r.a12.value.real() - 1.0 / 3.0) < 5.0 * r.a12.se_re);
  CHECK(std::abs(r.a12.value.imag()) < 5.0 * r.a12.se_im);
  CHECK(std::abs(r.a1.value) < 5.0 * (r.a1.se_re + r.a1.se_im));
  // Snapshot bookkeeping.
  REQUIRE(r.snap_t.size() == static_cast<std::size_t>(cfg.snapshots));
  CHECK(r.snap_t.back() == doctest::Approx(cfg.t_end).epsilon(1e-9));
}

TEST_CASE("sde: ensemble output is bitwise thread-invariant and repeatable") {
  const Params p = make_params(1.0, 1.0, 1.0, 0.3, 0.8, 0.1);
  SdeConfig cfg;
  cfg.n_traj = 257;  // deliberately not a multiple of the block size
  cfg.dt = 5e-4;
  cfg.t_end = 0.5;
  cfg.seed = 31;
  cfg.record_stride = 100;
  SdeConfig c1 = cfg, c4 = cfg;
  c1.threads = 1;
  c4.threads = 4;
  const SdeResult r1 = run_ensemble(p, c1);
  const SdeResult r4 = run_ensemble(p, c4);
  const SdeResult r1b = run_ensemble(p, c1);
  auto same = [](const CEstimate& x, const CEstimate& y) {
    return std::memcmp(&x.value, &y.value, sizeof x.value) == 0 &&
           x.se_re == y.se_re && x.se_im == y.se_im;
  };
  CHECK(same(r1.n1, r4.n1));
  CHECK(same(r1.n2, r4.n2));
  CHECK(same(r1.a12, r4.a12));
  CHECK(same(r1.n1, r1b.n1));
  CHECK(r1.snap_n1 == r4.snap_n1);
  REQUIRE(r1.traj0.size() == r4.traj0.size());
  for (std::size_t i = 0; i < r1.traj0.size(); ++i) {
    CHECK(r1.traj0[i].second.a1 == r4.traj0[i].second.a1);
    CHECK(r1.traj0[i].second.b2 == r4.traj0[i].second.b2);
  }
}

TEST_CASE("sde: divergent trajectories are flagged and excluded") {
  // Nearly linear amplification above threshold escapes any finite bound.
  const Params p = make_params(1.0, 0.0, 0.0, 0.0, 3.0, 1e-8);
  SdeConfig cfg;
  cfg.n_traj = 64;
  cfg.dt = 1e-3;
  cfg.t_end = 12.0;
  cfg.seed = 5;
  cfg.escape_bound = 50.0;
  const SdeResult r = run_ensemble(p, cfg);
  CHECK(r.n_divergent == 64);
  CHECK(r.n1.value == complex<double>(0.0, 0.0));  // empty accumulator
}

TEST_CASE("sde: deviation moments about the locked state are populated") {
  const Params p = make_params(1.0, 10.0, 10.0, 0.1, 11.0, 0.1);
  SdeConfig cfg;
  cfg.n_traj = 256;
  cfg.dt = 2e-4;
  cfg.t_end = 6.0;
  cfg.seed = 77;
  cfg.threads = 2;
  cfg.reference = steady_state(p);
  PPState x0;
  const double r0 = std::sqrt(cfg.reference->n0);
  x0.a1 = r0 * std::polar(1.0, cfg.reference->phi1);
  x0.a2 = r0 * std::polar(1.0, cfg.reference->phi2);
  x0.b1 = std::conj(x0.a1);
  x0.b2 = std::conj(x0.a2);
  cfg.x0 = x0;
  const SdeResult r = run_ensemble(p, cfg);
  CHECK(r.has_deviations);
  CHECK(r.n_divergent < cfg.n_traj / 10);
  // Above threshold the quasi-distribution develops heavy tails, so at this
  // ensemble size only the bookkeeping is checked: the accumulators must be
  // filled with finite values and carry positive standard errors.
  CHECK(std::isfinite(r.var_dn_minus.value.real()));
  CHECK(std::isfinite(r.var_dn_minus.value.imag()));
  CHECK(std::isfinite(r.var_dn_minus.se_re));
  CHECK(r.var_dn_minus.se_re > 0.0);
  CHECK(std::isfinite(r.var_dphi_minus.value.real()));
  CHECK(std::isfinite(r.var_dphi_minus.se_re));
  CHECK(r.var_dphi_minus.se_re > 0.0);
}

TEST_CASE("sde: configuration validation") {
  const Params p = make_params(1.0, 0.0, 0.0, 0.0, 0.5, 0.1);
  SdeConfig cfg;
  cfg.n_traj = 0;
  CHECK_THROWS_AS(run_ensemble(p, cfg), std::invalid_argument);
  cfg = SdeConfig{};
  cfg.avg_last = 100;  // more than snapshots
  CHECK_THROWS_AS(run_ensemble(p, cfg), std::invalid_argument);
}
