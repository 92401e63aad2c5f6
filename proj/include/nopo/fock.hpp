// Two-mode Fock-space representation of the pump-eliminated NOPO.
//
// The effective model evolves the two intracavity modes under
//   H = delta1 n1 + delta2 n2 + chi (a1^dag a2 + a2^dag a1)
//       + i eps (a1^dag a2^dag - a1 a2)
// with jump operators L1 = sqrt(2 gamma1) a1, L2 = sqrt(2 gamma2) a2 and
// the two-photon loss L3 = sqrt(2 lambda) a1 a2.  This master equation
// reproduces the moment hierarchy of the positive-P stochastic model.
//
// States are flattened as i = i1*n2 + i2; every operator needed by the
// trajectory kernel is a band with a fixed offset, stored as coefficient
// arrays (zero where a transition would leave the truncated space).
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "nopo/params.hpp"

namespace nopo {

struct EffectiveModel {
  Params params;
  int n1 = 0, n2 = 0;  // levels 0..n1-1, 0..n2-1
  int dim() const { return n1 * n2; }

  // Deterministic drift D0 = -i H - (1/2) sum_k L_k^dag L_k, five bands:
  //   (D0 psi)[i] = diag[i] psi[i]
  //     - i (chi_lo[i] psi[i-n2+1] + chi_hi[i] psi[i+n2-1])
  //     + eps_lo[i] psi[i-n2-1] - eps_hi[i] psi[i+n2+1]
  std::vector<std::complex<double>> diag;
  std::vector<double> chi_lo, chi_hi, eps_lo, eps_hi;

  // Jump gathers (L_k psi)[i] = l_k[i] psi[i + off_k] with offsets
  // off_1 = n2, off_2 = 1, off_3 = n2 + 1; prefactors included.
  std::vector<double> l1, l2, l3;
};

EffectiveModel build_effective_model(const Params& p, int n1, int n2);

// Dense matrices for small-dimension oracles.
Eigen::MatrixXcd dense_lower(int n);  // single-mode annihilation
Eigen::MatrixXcd dense_a1(const EffectiveModel& m);
Eigen::MatrixXcd dense_a2(const EffectiveModel& m);
Eigen::MatrixXcd dense_H(const EffectiveModel& m);
std::vector<Eigen::MatrixXcd> dense_jumps(const EffectiveModel& m);
// D0 assembled densely from the band arrays (for validating the kernel).
Eigen::MatrixXcd dense_D0(const EffectiveModel& m);

}  // namespace nopo
