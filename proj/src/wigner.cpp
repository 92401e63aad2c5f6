#include "nopo/wigner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace nopo {

WignerField wigner_from_density(const DensityMatrix& rho, WignerGrid grid) {
  const int N = rho.dim;
  if (N < 1 || N > 200)
    throw std::invalid_argument("wigner_from_density: dim must be in [1, 200]");
  const double tr = rho.trace_real();
  if (!(tr > 0.0))
    throw std::invalid_argument("wigner_from_density: non-positive trace");

  double nbar = 0.0;
  for (int m = 0; m < N; ++m) nbar += m * rho.at(m, m).real() / tr;
  if (grid.extent <= 0.0) grid.extent = 3.0 * std::sqrt(nbar + 1.0);
  if (grid.points < 3 || grid.points % 2 == 0)
    throw std::invalid_argument(
        "wigner_from_density: points must be odd and >= 3");
  // Thermal-envelope estimate of the radial mass outside the grid
  // (exact for thermal states, conservative for number-bounded ones).
  const double outside =
      std::exp(-grid.extent * grid.extent / (nbar + 0.5));
  if (outside >= 0.05) {
    char msg[160];
    std::snprintf(msg, sizeof msg,
                  "wigner_from_density: grid too small, ~%.0f%% of the mass "
                  "may lie outside; increase extent to at least %.3g",
                  100.0 * outside, std::sqrt(3.0 * (nbar + 0.5)));
    throw std::invalid_argument(msg);
  }

  WignerField f;
  f.grid = grid;
  const int P = grid.points;
  f.x.resize(P);
  for (int i = 0; i < P; ++i)
    f.x[i] = -grid.extent + 2.0 * grid.extent * i / double(P - 1);
  f.w.assign(std::size_t(P) * P, 0.0);

  std::vector<double> wk(N);  // weighted Laguerre values for current k
  for (int ix = 0; ix < P; ++ix)
    for (int iy = 0; iy < P; ++iy) {
      const double xr = f.x[ix], yi = f.x[iy];
      const double r2 = xr * xr + yi * yi;
      const double x4 = 4.0 * r2;
      const double phi = std::atan2(yi, xr);
      double acc = 0.0;
      for (int k = 0; k < N; ++k) {
        const int mmax = N - k;
        // w_m = e^{-x/2} sqrt(m!/(m+k)!) x^{k/2} L_m^k(x), by upward
        // recurrence in m.
        double w0;
        if (x4 == 0.0)
          w0 = (k == 0) ? 1.0 : 0.0;
        else
          w0 = std::exp(-0.5 * x4 + 0.5 * k * std::log(x4) -
                        0.5 * std::lgamma(double(k + 1)));
        double wm1 = 0.0, wm = w0;
        for (int m = 0; m < mmax; ++m) {
          wk[m] = wm;
          const double next =
              ((2.0 * m + k + 1.0 - x4) * wm - std::sqrt(double(m) * (m + k)) * wm1) /
              std::sqrt(double(m + 1) * (m + k + 1));
          wm1 = wm;
          wm = next;
        }
        if (k == 0) {
          for (int m = 0; m < mmax; ++m) {
            const double sign = (m & 1) ? -1.0 : 1.0;
            acc += sign * rho.at(m, m).real() * wk[m];
          }
        } else {
          const std::complex<double> ph = std::exp(std::complex<double>(0.0, k * phi));
          for (int m = 0; m < mmax; ++m) {
            const double sign = (m & 1) ? -1.0 : 1.0;
            acc += sign * 2.0 * std::real(rho.at(m, m + k) * ph) * wk[m];
          }
        }
      }
      f.w[std::size_t(ix) * P + iy] = 2.0 / M_PI * acc / tr;
    }
  return f;
}

double twofold_asymmetry(const WignerField& f) {
  const int P = f.grid.points;
  double tot = 0.0, odd = 0.0;
  for (int i = 0; i < P; ++i)
    for (int j = 0; j < P; ++j) {
      const double a = f.at(i, j);
      const double b = f.at(P - 1 - i, P - 1 - j);
      tot += std::abs(a);
      odd += std::abs(a - b);
    }
  return tot > 0.0 ? 0.5 * odd / tot : 0.0;
}

namespace {
double bilinear(const WignerField& f, double x, double y) {
  const int P = f.grid.points;
  const double L = f.grid.extent;
  const double h = 2.0 * L / (P - 1);
  double u = (x + L) / h, v = (y + L) / h;
  u = std::clamp(u, 0.0, double(P - 1));
  v = std::clamp(v, 0.0, double(P - 1));
  const int i = std::min(int(u), P - 2), j = std::min(int(v), P - 2);
  const double fu = u - i, fv = v - j;
  return (1 - fu) * (1 - fv) * f.at(i, j) + fu * (1 - fv) * f.at(i + 1, j) +
         (1 - fu) * fv * f.at(i, j + 1) + fu * fv * f.at(i + 1, j + 1);
}
}  // namespace

PhasePortrait phase_portrait(const WignerField& f, int n_angles, int n_radii) {
  double wmax = 0.0;
  for (double v : f.w) wmax = std::max(wmax, std::abs(v));
  if (wmax == 0.0)
    throw std::invalid_argument("phase_portrait: all-zero grid");
  PhasePortrait out;
  const double rmax = f.grid.extent * 0.98;
  std::vector<double> radial(n_radii, 0.0);
  for (int j = 0; j < n_radii; ++j) {
    const double r = rmax * (j + 0.5) / n_radii;
    double s = 0.0;
    for (int l = 0; l < n_angles; ++l) {
      const double th = 2.0 * M_PI * l / n_angles;
      s += bilinear(f, r * std::cos(th), r * std::sin(th));
    }
    radial[j] = s * r;  // ~ integral of W over the circle of radius r
  }
  const int jstar = int(std::max_element(radial.begin(), radial.end()) -
                        radial.begin());
  out.r_star = rmax * (jstar + 0.5) / n_radii;

  // Angular profile averaged over a thin shell around r_star.
  std::vector<double> A(n_angles, 0.0);
  const int shell = 2;
  int used = 0;
  for (int dj = -shell; dj <= shell; ++dj) {
    const int j = jstar + dj;
    if (j < 0 || j >= n_radii) continue;
    ++used;
    const double r = rmax * (j + 0.5) / n_radii;
    for (int l = 0; l < n_angles; ++l) {
      const double th = 2.0 * M_PI * l / n_angles;
      A[l] += bilinear(f, r * std::cos(th), r * std::sin(th));
    }
  }
  for (double& a : A) a /= used;

  const double amax = *std::max_element(A.begin(), A.end());
  const double amin = *std::min_element(A.begin(), A.end());
  out.uniformity = amax > 0.0 ? std::max(0.0, amin) / amax : 0.0;

  // Narrow circular Gaussian smoothing so single-bin sampling noise cannot
  // masquerade as a peak (sigma = 3 bins at the default 360-bin grid).
  const int sig = std::max(1, n_angles / 120);
  const int half_k = 4 * sig;
  std::vector<double> S(n_angles, 0.0);
  {
    std::vector<double> k(2 * half_k + 1);
    double ks = 0.0;
    for (int j = -half_k; j <= half_k; ++j)
      ks += k[j + half_k] =
          std::exp(-0.5 * double(j) * j / (double(sig) * sig));
    for (int l = 0; l < n_angles; ++l) {
      double s = 0.0;
      for (int j = -half_k; j <= half_k; ++j)
        s += k[j + half_k] * A[(l + j + n_angles) % n_angles];
      S[l] = s / ks;
    }
  }
  std::vector<double> srt(S);
  std::nth_element(srt.begin(), srt.begin() + srt.size() / 2, srt.end());
  const double median = srt[srt.size() / 2];

  // Strict circular local maxima of the smoothed profile above 1.15x its
  // median: the threshold sits between the shallow phase-locked angular
  // doublet (>~1.25x) and the self-pulsing ring (<~1.10x).
  double fwhm_sum = 0.0;
  for (int l = 0; l < n_angles; ++l) {
    const double prev = S[(l + n_angles - 1) % n_angles];
    const double next = S[(l + 1) % n_angles];
    if (S[l] > prev && S[l] > next && S[l] > 1.15 * median) {
      ++out.peak_count;
      out.peak_angles.push_back(2.0 * M_PI * l / n_angles);
      // Angular FWHM: walk to the crossings of (peak + median)/2.
      const double half = 0.5 * (S[l] + median);
      int left = 0, right = 0;
      while (left < n_angles &&
             S[(l - left - 1 + 2 * n_angles) % n_angles] > half)
        ++left;
      while (right < n_angles && S[(l + right + 1) % n_angles] > half) ++right;
      fwhm_sum += 2.0 * M_PI * (left + right + 1) / n_angles;
    }
  }
  if (out.peak_count > 0) out.mean_fwhm = fwhm_sum / out.peak_count;
  return out;
}

}  // namespace nopo
