// Below-threshold linearized fluctuation spectra and squeezing variance of
// the cavity output fields.
//
// The fluctuations obey dL/dt = -F L + R with
//   F = [[A, -B], [-B*, A*]],  A = (gamma + i delta) I + i chi sigma_x,
//   B = eps sigma_x,
// and noise <R R^T> = diag(B, B*) delta(t - t').  In frequency space the
// correlation blocks G0 = <da da^T>(w), G1 = <da db^T>(w) have the closed
// form below; the output quadrature variance is assembled from them.
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "nopo/params.hpp"

namespace nopo {

struct SpectralBlocks {
  Eigen::Matrix2cd G0, G1;
};

struct StaticCorrelators {
  Eigen::Matrix2cd aa;  // <d alpha d alpha^T>
  Eigen::Matrix2cd ab;  // <d alpha d beta^T>
};

// Normalization of the output spectrum.  `matched` uses N = gamma, making
// the vacuum level exactly 1 and matching the canonical degenerate-OPO
// limit V = 1 - 4 gamma eps / ((gamma + eps)^2 + w^2) at chi = delta = 0;
// `density` uses N = gamma/pi (spectral-density convention).
enum class Normalization { matched, density };

// Requires symmetric parameters and eps at least 1e-6*gamma below eps_th.
// Throws on the singular manifold |d^2 - e^2| < 1e-12 d^2.
SpectralBlocks spectral_blocks(const Params& p, double w);

// Equal-time second moments of the below-threshold fluctuations.
StaticCorrelators static_correlators(const Params& p);

// Output quadrature variance V(theta, omega); vacuum level 1 in the
// `matched` normalization.  V is even in omega.
double squeezing_variance(const Params& p, double theta, double omega,
                          Normalization norm = Normalization::matched);

struct SpectrumPoint {
  double omega, V;
};

// V(theta, omega) on a uniform grid (default 801 points on [-8g, 8g]).
std::vector<SpectrumPoint> squeezing_spectrum(
    const Params& p, double theta, double omega_min, double omega_max,
    int n_points, Normalization norm = Normalization::matched);
std::vector<SpectrumPoint> squeezing_spectrum(
    const Params& p, double theta, Normalization norm = Normalization::matched);

struct BestSqueezing {
  double theta;  // optimal local-oscillator phase at the reported omega
  double omega;  // reported from the nonnegative half (V is even in omega)
  double V;
};

// Joint minimum over theta (analytic) and an omega grid (default spacing
// 0.02*gamma up to 8*gamma).
BestSqueezing best_squeezing(const Params& p, int n_points = 401,
                             double omega_max_factor = 8.0,
                             Normalization norm = Normalization::matched);

}  // namespace nopo
