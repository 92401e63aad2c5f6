// Positive-P stochastic integration of the pump-eliminated NOPO.
//
// Phase space is doubled: (alpha_1, alpha_2, beta_1, beta_2) with beta_i
// independent of conj(alpha_i).  Quantum expectation values of normally
// ordered operator products equal ensemble averages of the corresponding
// stochastic products (e.g. <a_i^dag a_i> = <beta_i alpha_i>).
//
// Noise: the alpha sector has <R1 R2> = (eps - lambda a1 a2) dt and zero
// self-correlation, realized by R1 = s (x1 + i x2) sqrt(dt),
// R2 = s (x1 - i x2) sqrt(dt) with s = sqrt((eps - lambda a1 a2)/2)
// (principal branch); the beta sector uses fresh normals with
// eps - lambda b1 b2.  Integration is Euler-Maruyama with all right-hand
// sides evaluated at the pre-step values.
#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "nopo/params.hpp"

namespace nopo {

struct PPState {
  std::complex<double> a1{}, a2{}, b1{}, b2{};
};

PPState pp_drift(const Params& p, const PPState& s);

struct NoiseIncrements {
  std::complex<double> r1, r2;  // alpha sector
  std::complex<double> s1, s2;  // beta sector
};

// The four correlated noise increments for one step (already scaled by
// sqrt(dt)); addressed by (seed, traj, step) through the counter RNG.
NoiseIncrements sample_noise(const Params& p, const PPState& s, double dt,
                             std::uint64_t seed, std::uint32_t traj,
                             std::uint64_t step);

PPState pp_step(const Params& p, const PPState& s, double dt,
                std::uint64_t seed, std::uint32_t traj, std::uint64_t step);

struct SdeConfig {
  long n_traj = 1000;
  double dt = 1e-4;
  double t_end = 10.0;
  std::uint64_t seed = 1;
  int threads = 1;
  double escape_bound = 1e3;  // trajectory flagged divergent beyond this
  int snapshots = 50;         // moment sampling times over (0, t_end]
  int avg_last = 10;          // snapshots averaged into the reported moments
  PPState x0{};               // common initial condition (vacuum by default)
  // When set, photon-number/phase deviations are measured about this locked
  // state and the dn/dphi moment fields are populated.
  std::optional<SteadyState> reference;
  int record_stride = 0;      // >0: record trajectory 0 every this many steps
};

struct CEstimate {
  std::complex<double> value{};
  double se_re = 0.0, se_im = 0.0;
};

struct SdeResult {
  long n_traj = 0, n_divergent = 0;
  // Quasi-distribution means (normally ordered moments).
  CEstimate n1, n2;    // <beta_i alpha_i>
  CEstimate a12;       // <alpha_1 alpha_2>
  CEstimate a1, a2;    // <alpha_i>
  // Deviation second moments about the reference locked state
  // (dn-+ = dn2 -+ dn1, dphi-+ = dphi2 -+ dphi1); populated iff reference.
  // These are quasi-averages of complex products (n_j = beta_j alpha_j and
  // phi_j = (1/2i) log(alpha_j/beta_j)); their real parts estimate the
  // analytic correlators.
  bool has_deviations = false;
  CEstimate var_dn_minus, var_dphi_minus, cov_dn_dphi_minus;
  CEstimate var_dn_plus, var_dphi_plus, cov_dn_dphi_plus;
  // Ensemble-mean Re<beta_i alpha_i> at every snapshot time.
  std::vector<double> snap_t, snap_n1, snap_n2;
  // Optional single-trajectory record (t, state) of trajectory 0.
  std::vector<std::pair<double, PPState>> traj0;
};

// Runs the ensemble with a fixed 64-block accumulation layout; results are
// bitwise independent of the thread count.  Divergent trajectories are
// excluded from all statistics and counted.
SdeResult run_ensemble(const Params& p, const SdeConfig& cfg);

}  // namespace nopo
