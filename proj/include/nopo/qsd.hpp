// Quantum-state-diffusion unravelling of the effective master equation and
// density-matrix reconstruction from trajectory ensembles.
//
// One step of the norm-preserving Ito scheme:
//   |dpsi> = D0 |psi> dt
//          + sum_k [ <L_k^dag> L_k - 1/2 |<L_k>|^2 ] |psi> dt
//          + sum_k (L_k - <L_k>) |psi> dxi_k,
// with D0 = -iH - 1/2 sum_k L_k^dag L_k, complex Wiener increments
// <dxi_j dxi_k> = 0, <dxi_j dxi_k^*> = delta_jk dt, followed by explicit
// renormalization.
#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "nopo/fock.hpp"

namespace nopo {

// Hermitian matrix averaged from trajectories, with a binary container
// format ("NOPODM01", little-endian dims and doubles, SHA-256 trailer).
struct DensityMatrix {
  int dim = 0;
  long n_traj = 0;  // trajectories x snapshots averaged into the estimate
  std::vector<std::complex<double>> m;  // row-major dim x dim

  std::complex<double>& at(int i, int j) { return m[std::size_t(i) * dim + j]; }
  const std::complex<double>& at(int i, int j) const {
    return m[std::size_t(i) * dim + j];
  }
  double trace_real() const;

  void save(const std::filesystem::path& path) const;
  static DensityMatrix load(const std::filesystem::path& path);
};

// Partial trace of a two-mode matrix (flattening i = i1*n2 + i2).
// keep_mode is 1 or 2.
DensityMatrix reduce_mode(const DensityMatrix& rho12, int n1, int n2,
                          int keep_mode);

// One QSD step.  psi must be normalized (checked to 1e-8); returns the
// pre-renormalization norm so callers can track the renormalization log.
double qsd_step(const EffectiveModel& m, std::vector<std::complex<double>>& psi,
                double dt, std::uint64_t seed, std::uint32_t traj,
                std::uint64_t step);

struct QsdConfig {
  long n_traj = 500;
  double dt = 1e-4;
  double t_end = 10.0;
  std::uint64_t seed = 1;
  int threads = 1;
  int snapshots = 50;
  int avg_last = 10;  // snapshots entering moments and density matrices
  enum class Rho { none, reduced, full } rho = Rho::reduced;
  int record_stride = 0;     // trajectory-0 photon-number record cadence
  double trunc_tol = 1e-5;   // per-mode top-two-level population flag level
  int init_n1 = 0, init_n2 = 0;  // initial Fock state |init_n1, init_n2>
};

struct CMoment {
  std::complex<double> value{};
  double se_re = 0.0, se_im = 0.0;
};

struct QsdResult {
  long n_traj = 0;
  long n_flagged = 0;   // trajectories whose truncation monitor tripped
  bool flagged = false; // > 1% of trajectories tripped the monitor
  double mean_log_norm_per_step = 0.0;

  // Ensemble moments over the last avg_last snapshots.
  CMoment a1, a2, n1, n2, a12, a1d_a2, a1_sq, a2_sq;

  std::vector<double> snap_t, snap_n1, snap_n2;  // ensemble means vs time
  std::vector<std::array<double, 3>> traj0;      // (t, n1, n2), trajectory 0

  DensityMatrix rho1, rho2;  // reduced single-mode matrices (rho != none)
  DensityMatrix rho12;       // full two-mode matrix (rho == full)
};

// Fixed 8-block accumulation; results are bitwise independent of the
// thread count.  Requires dt <= 1e-3 / max(gamma_i, |delta_i|, chi, eps,
// lambda * max(n1, n2)).
QsdResult run_qsd_ensemble(const EffectiveModel& m, const QsdConfig& cfg);

struct PairMoments {
  std::complex<double> a1{}, a2{}, n1{}, n2{}, a12{};
};

struct DuanResult {
  double V = 0.0;
  double theta1 = 0.0, theta2 = 0.0;  // phases achieving the reported V
};

// V = (1/2)[Var(X1 - X2) + Var(Y1 + Y2)] with
// X_k = (a_k^dag e^{-i theta_k} + a_k e^{i theta_k})/sqrt(2); V < 1 is the
// inseparability threshold.  Minimized over a common offset applied to
// both local-oscillator phases (base phases theta1, theta2).
double duan_variance(const PairMoments& m, double theta1, double theta2);
DuanResult duan_minimize(const PairMoments& m, double base_theta1 = 0.0,
                         double base_theta2 = 0.0, int n_scan = 720);

PairMoments pair_moments_from_rho(const DensityMatrix& rho12, int n1, int n2);
PairMoments pair_moments(const QsdResult& r);

}  // namespace nopo
