// Noise-free (semiclassical) dynamics of the intracavity amplitudes on the
// classical manifold beta_i = conj(alpha_i), integrated with fixed-step RK4,
// plus spectral self-pulsing diagnosis and linear stability utilities.
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "nopo/params.hpp"

namespace nopo {

struct CState {
  std::complex<double> a1, a2;
};

// d(alpha_i)/dt with the pump eliminated:
//   d a1 = -(gamma1 + i delta1) a1 + (eps - lambda a1 a2) conj(a2) - i chi a2
// and 1 <-> 2.
CState drift(const Params& p, const CState& s);

struct Trajectory {
  std::vector<double> t;
  std::vector<CState> x;
  double dt = 0.0;  // integrator step (records may be strided)
};

// Fixed-step RK4.  Records every record_stride-th step (including t=0 and
// the final time).  Throws std::runtime_error if |alpha_i| exceeds
// escape_bound, reporting the blow-up time.
Trajectory integrate(const Params& p, CState x0, double t_end, double dt,
                     int record_stride = 1, double escape_bound = 1e6);

struct PulsingDiagnosis {
  enum class Kind { fixed_point, periodic, undecided };
  Kind kind = Kind::undecided;
  double period = 0.0;      // 1/f of the dominant spectral peak (periodic only)
  double peak_ratio = 0.0;  // dominant nonzero-frequency peak / background median
  double late_span = 0.0;   // relative span of n1 over the last quarter
};

// Classifies the attractor from the recorded n1(t): the first half of the
// record is discarded as transient; "periodic" requires the largest
// nonzero-frequency peak of the power spectrum to exceed 10x the background
// median and the retained record to cover >= 20 putative periods;
// "fixed_point" requires the late-time relative span to fall below 1e-6.
PulsingDiagnosis diagnose_pulsing(const Trajectory& tr);

// Eigenvalues of the linearized flow at the zero-amplitude solution (growth
// rates; positive real part means the trivial solution is unstable).
Eigen::Vector4cd origin_growth_rates(const Params& p);

// Numeric generation threshold: the eps at which the largest origin growth
// rate crosses zero, located by bisection on [eps_lo, eps_hi] (the bracket
// must straddle the crossing).  Works for asymmetric rates and detunings.
double growth_threshold_eps(const Params& p, double eps_lo, double eps_hi,
                            double tol = 1e-10);

// Real 4x4 Jacobian of the semiclassical flow at a point, in coordinates
// (Re a1, Im a1, Re a2, Im a2), and its largest eigenvalue real part.
Eigen::Matrix4d jacobian(const Params& p, const CState& s);
double max_growth_rate(const Params& p, const CState& s);

}  // namespace nopo
