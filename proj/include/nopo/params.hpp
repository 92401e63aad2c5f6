// Model parameters of the two-mode NOPO with intracavity waveplate after
// adiabatic elimination of the pump mode, and the closed-form steady state
// of the phase-locked regime.
//
// Units: all rates are in units of an arbitrary reference rate; the
// effective pump amplitude and nonlinearity are eps = k*E/gamma3 and
// lambda = k^2/gamma3.
#pragma once

#include <stdexcept>
#include <string>

namespace nopo {

struct Params {
  double gamma1 = 1.0;   // signal cavity decay rate
  double gamma2 = 1.0;   // idler cavity decay rate
  double delta1 = 0.0;   // signal detuning
  double delta2 = 0.0;   // idler detuning
  double chi = 0.0;      // waveplate (polarization mixer) coupling, >= 0
  double k = 0.0;        // parametric coupling to the pump mode
  double E = 0.0;        // external pump drive amplitude
  double gamma3 = 100.0; // pump decay rate (adiabatically eliminated)

  double eps() const { return k * E / gamma3; }
  double lambda() const { return k * k / gamma3; }

  // Pump elimination assumes gamma3 dominates the subharmonic decay rates.
  bool adiabatic_warning() const {
    return gamma3 < 10.0 * (gamma1 > gamma2 ? gamma1 : gamma2);
  }

  // The closed-form results below hold for equal decay rates and equal
  // detunings (delta1 == delta2).
  bool symmetric() const { return gamma1 == gamma2 && delta1 == delta2; }
};

// Convenience constructor from the effective parameters (choice of k, E for
// given eps, lambda at fixed gamma3 is unique up to the eliminated pump's
// internal scale).
Params make_params(double gamma, double delta1, double delta2, double chi,
                   double eps, double lambda, double gamma3 = 100.0);

// Throws std::invalid_argument naming every offending field.
void validate(const Params& p);

// Generation threshold eps_th = sqrt((chi - |delta|)^2 + gamma^2) of the
// phase-locked branch.  Requires symmetric().
double threshold_eps(const Params& p);

// Strict phase-locking condition 4 chi^2 delta1 delta2 >
// (gamma1 delta2 - gamma2 delta1)^2 for general rates and detunings.
bool is_phase_locked(const Params& p);

struct SteadyState {
  double n0;    // photon number of each mode
  double phi1;  // locked phase of mode 1
  double phi2;  // locked phase of mode 2
  bool anti_phase;      // true when phi1 - phi2 = pi (selected for delta > 0)
  bool phases_defined;  // false below threshold (n0 = 0, phases are NaN)
};

// Steady state of the phase-locked branch.  Above threshold, n0 and both
// locked phases; at or below threshold, n0 = 0 with phases flagged
// undefined.  branch_k shifts both phases by pi*branch_k (the residual
// discrete symmetry).  Requires symmetric(), phase locking, and lambda > 0.
SteadyState steady_state(const Params& p, int branch_k = 0);

}  // namespace nopo
