// Linearized fluctuation correlators and photon-number statistics of the
// phase-locked NOPO above threshold.
//
// Variables: dn+- = dn2 +- dn1 and dphi+- = dphi2 +- dphi1, deviations of
// the stochastic photon numbers and phases from the locked steady state.
// The correlators are quasi-probability (normally ordered) averages; the
// diagonal dn- entry is negative above threshold, signalling sub-shot-noise
// intensity-difference fluctuations.
#pragma once

#include <Eigen/Dense>

#include "nopo/params.hpp"

namespace nopo {

struct QuadCorrelators {
  // Row/column order: (dn, dphi).
  Eigen::Matrix2d plus;   // <(dn+, dphi+) (dn+, dphi+)^T>
  Eigen::Matrix2d minus;  // <(dn-, dphi-) (dn-, dphi-)^T>
};

// Requires symmetric parameters, phase locking, eps > eps_th and delta != 0.
QuadCorrelators correlators_above(const Params& p);

struct PhotonStatistics {
  double R;    // variance of the photon-number difference
  double R_N;  // R normalized to the coherent-state level 2 n0
  double g;    // <a_i^dag^2 a_i^2>, equal for both modes
  double g12;  // <a1^dag a2^dag a1 a2>
};

// Same preconditions as correlators_above.
PhotonStatistics photon_number_statistics(const Params& p);

}  // namespace nopo
