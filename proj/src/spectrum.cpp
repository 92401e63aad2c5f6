#include "nopo/spectrum.hpp"

#include <cmath>

namespace nopo {

namespace {

void require_below(const Params& p) {
  validate(p);
  if (!p.symmetric())
    throw std::invalid_argument("spectrum: requires symmetric parameters");
  const double eth = threshold_eps(p);
  if (!(p.eps() < eth - 1e-6 * p.gamma1))
    throw std::invalid_argument(
        "spectrum: linearization invalid at or above threshold (requires "
        "eps below eps_th by at least 1e-6*gamma)");
}

struct Scalars {
  std::complex<double> a, b;
  double c, d, e;
};

Scalars scalars(const Params& p, double w) {
  const std::complex<double> gi(p.gamma1, p.delta1);
  Scalars s;
  s.a = gi * gi - p.chi * p.chi + p.eps() * p.eps() + w * w;
  s.b = std::complex<double>(0.0, 2.0 * p.chi) * gi;
  s.c = 2.0 * p.gamma1 * p.eps();
  s.d = std::norm(s.a) + std::norm(s.b) - s.c * s.c;
  s.e = 2.0 * std::real(s.a * std::conj(s.b));
  return s;
}

double norm_factor(const Params& p, Normalization n) {
  return n == Normalization::matched ? p.gamma1 : p.gamma1 / M_PI;
}

}  // namespace

SpectralBlocks spectral_blocks(const Params& p, double w) {
  require_below(p);
  const Scalars s = scalars(p, w);
  const double den = s.d * s.d - s.e * s.e;
  if (std::abs(den) < 1e-12 * s.d * s.d)
    throw std::runtime_error(
        "spectral_blocks: spectral singularity (d^2 ~ e^2, at threshold)");
  Eigen::Matrix2cd I = Eigen::Matrix2cd::Identity(), SX;
  SX << 0.0, 1.0, 1.0, 0.0;
  SpectralBlocks g;
  const double eps = p.eps();
  g.G0 = eps / den *
         ((s.d * std::conj(s.b) - s.e * std::conj(s.a)) * I +
          (s.d * std::conj(s.a) - s.e * std::conj(s.b)) * SX);
  g.G1 = eps * s.c / den * (s.d * I - s.e * SX);

  // Verify the defining pair (aI+b sx)G0 - c sx conj(G1) = eps sx and
  // (aI+b sx)G1 - c sx conj(G0) = 0 before returning.
  const Eigen::Matrix2cd A = s.a * I + s.b * SX;
  const Eigen::Matrix2cd r0 = A * g.G0 - s.c * SX * g.G1.conjugate() - eps * SX;
  const Eigen::Matrix2cd r1 = A * g.G1 - s.c * SX * g.G0.conjugate();
  const double scale = eps + (A * g.G0).cwiseAbs().maxCoeff() +
                       s.c * g.G1.cwiseAbs().maxCoeff();
  if (r0.cwiseAbs().maxCoeff() + r1.cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw std::logic_error("spectral_blocks: defining system residual > 1e-10");
  return g;
}

StaticCorrelators static_correlators(const Params& p) {
  require_below(p);
  const double gamma = p.gamma1, delta = p.delta1, chi = p.chi, eps = p.eps();
  const double S2 = gamma * gamma + chi * chi + delta * delta - eps * eps;
  const double den = S2 * S2 - 4.0 * delta * delta * chi * chi;
  if (!(den > 0.0))
    throw std::runtime_error("static_correlators: singular denominator");
  const std::complex<double> i(0.0, 1.0);
  StaticCorrelators c;
  Eigen::Matrix2cd re, im;
  re << -2.0 * chi * delta, S2, S2, -2.0 * chi * delta;
  im << chi * (S2 - 2.0 * delta * delta), delta * (S2 - 2.0 * chi * chi),
      delta * (S2 - 2.0 * chi * chi), chi * (S2 - 2.0 * delta * delta);
  c.aa = eps / (2.0 * den) * (gamma * re - i * im);
  c.ab = Eigen::Matrix2cd::Zero();
  c.ab << S2, -2.0 * chi * delta, -2.0 * chi * delta, S2;
  c.ab *= eps * eps / (2.0 * den);
  return c;
}

namespace {
// S1(theta, w) = N (G1_11(w) + G1_22(-w) + 2 Re[e^{2 i theta} conj(G0_21(w))]).
double S1(const Params& p, double theta, double w, double N) {
  const SpectralBlocks gp = spectral_blocks(p, w);
  const SpectralBlocks gm = spectral_blocks(p, -w);
  const std::complex<double> phase = std::exp(std::complex<double>(0.0, 2.0 * theta));
  return N * (gp.G1(0, 0).real() + gm.G1(1, 1).real() +
              2.0 * std::real(phase * std::conj(gp.G0(1, 0))));
}
}  // namespace

double squeezing_variance(const Params& p, double theta, double omega,
                          Normalization norm) {
  const double N = norm_factor(p, norm);
  const double delta = p.delta1;
  return 1.0 + S1(p, theta, omega - delta, N) + S1(p, theta, -omega - delta, N);
}

std::vector<SpectrumPoint> squeezing_spectrum(const Params& p, double theta,
                                              double omega_min,
                                              double omega_max, int n_points,
                                              Normalization norm) {
  if (n_points < 2)
    throw std::invalid_argument("squeezing_spectrum: need >= 2 grid points");
  std::vector<SpectrumPoint> out;
  out.reserve(n_points);
  for (int i = 0; i < n_points; ++i) {
    const double w =
        omega_min + (omega_max - omega_min) * i / double(n_points - 1);
    out.push_back({w, squeezing_variance(p, theta, w, norm)});
  }
  return out;
}

std::vector<SpectrumPoint> squeezing_spectrum(const Params& p, double theta,
                                              Normalization norm) {
  const double g = p.gamma1;
  return squeezing_spectrum(p, theta, -8.0 * g, 8.0 * g, 801, norm);
}

BestSqueezing best_squeezing(const Params& p, int n_points,
                             double omega_max_factor, Normalization norm) {
  const double N = norm_factor(p, norm);
  const double delta = p.delta1;
  BestSqueezing best{0.0, 0.0, std::numeric_limits<double>::infinity()};
  for (int i = 0; i < n_points; ++i) {
    const double w = omega_max_factor * p.gamma1 * i / double(n_points - 1);
    const SpectralBlocks gp = spectral_blocks(p, w - delta);
    const SpectralBlocks gm = spectral_blocks(p, -w - delta);
    // theta enters only through 2 N Re(e^{2 i theta} Z); the minimum over
    // theta is base - 2 N |Z| at theta = (pi - arg Z)/2.
    const std::complex<double> Z =
        std::conj(gp.G0(1, 0)) + std::conj(gm.G0(1, 0));
    const double base =
        1.0 + N * (gp.G1(0, 0).real() +
                   spectral_blocks(p, -(w - delta)).G1(1, 1).real() +
                   gm.G1(0, 0).real() +
                   spectral_blocks(p, w + delta).G1(1, 1).real());
    const double v = base - 2.0 * N * std::abs(Z);
    if (v < best.V) {
      best.V = v;
      best.omega = w;
      best.theta = (M_PI - std::arg(Z)) / 2.0;
    }
  }
  return best;
}

}  // namespace nopo
