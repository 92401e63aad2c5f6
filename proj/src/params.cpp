#include "nopo/params.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace nopo {

Params make_params(double gamma, double delta1, double delta2, double chi,
                   double eps, double lambda, double gamma3) {
  Params p;
  p.gamma1 = p.gamma2 = gamma;
  p.delta1 = delta1;
  p.delta2 = delta2;
  p.chi = chi;
  p.gamma3 = gamma3;
  // eps = kE/gamma3, lambda = k^2/gamma3  =>  k = sqrt(lambda*gamma3).
  p.k = std::sqrt(lambda * gamma3);
  p.E = (p.k > 0.0) ? eps * gamma3 / p.k : 0.0;
  return p;
}

void validate(const Params& p) {
  std::ostringstream bad;
  auto flag = [&bad](bool ok, const char* what) {
    if (!ok) bad << (bad.tellp() > 0 ? ", " : "") << what;
  };
  flag(std::isfinite(p.gamma1) && p.gamma1 > 0.0,
       "gamma1: decay rate must be positive");
  flag(std::isfinite(p.gamma2) && p.gamma2 > 0.0,
       "gamma2: decay rate must be positive");
  flag(std::isfinite(p.gamma3) && p.gamma3 > 0.0,
       "gamma3: decay rate must be positive");
  flag(std::isfinite(p.delta1), "delta1 must be finite");
  flag(std::isfinite(p.delta2), "delta2 must be finite");
  flag(std::isfinite(p.chi) && p.chi >= 0.0, "chi must be finite and >= 0");
  flag(std::isfinite(p.k) && p.k >= 0.0, "k must be finite and >= 0");
  flag(std::isfinite(p.E) && p.E >= 0.0, "E must be finite and >= 0");
  if (bad.tellp() > 0)
    throw std::invalid_argument("invalid parameters: " + bad.str());
}

double threshold_eps(const Params& p) {
  validate(p);
  if (!p.symmetric())
    throw std::invalid_argument(
        "threshold_eps: threshold formula valid only in symmetric case "
        "(gamma1 == gamma2, delta1 == delta2); use the numeric growth "
        "threshold instead");
  const double d = std::abs(p.delta1);
  const double u = p.chi - d;
  return std::sqrt(u * u + p.gamma1 * p.gamma1);
}

bool is_phase_locked(const Params& p) {
  validate(p);
  const double lhs = 4.0 * p.chi * p.chi * p.delta1 * p.delta2;
  const double m = p.gamma1 * p.delta2 - p.gamma2 * p.delta1;
  return lhs > m * m;
}

SteadyState steady_state(const Params& p, int branch_k) {
  validate(p);
  if (!p.symmetric())
    throw std::invalid_argument("steady_state: requires symmetric parameters");
  if (!is_phase_locked(p))
    throw std::invalid_argument(
        "steady_state: parameters violate the phase-locking condition");
  const double eps = p.eps(), lam = p.lambda();
  if (!(lam > 0.0))
    throw std::invalid_argument("steady_state: lambda must be > 0");
  const double eth = threshold_eps(p);
  if (!(eps > eth)) {
    SteadyState s{};
    s.n0 = 0.0;
    s.phi1 = s.phi2 = std::numeric_limits<double>::quiet_NaN();
    s.anti_phase = false;
    s.phases_defined = false;
    return s;
  }

  const double gamma = p.gamma1, delta = p.delta1;
  const double ad = std::abs(delta);
  const double u = p.chi - ad;
  const double n0 = (std::sqrt(eps * eps - u * u) - gamma) / lam;

  // The stable branch solves (gamma + lambda*n0 + i(delta -+ chi)) e^{iS} =
  // eps with S = phi1 + phi2; the phase difference is pi for delta > 0
  // (anti-phase lock) and 0 for delta < 0.
  const double half_asin = 0.5 * std::asin((ad - p.chi) / eps);
  SteadyState s{};
  s.n0 = n0;
  s.phases_defined = true;
  s.anti_phase = delta > 0.0;
  const double shift = M_PI * branch_k;
  if (s.anti_phase) {
    s.phi1 = M_PI / 2.0 - half_asin + shift;
    s.phi2 = s.phi1 - M_PI;
  } else {
    s.phi1 = half_asin + shift;
    s.phi2 = s.phi1;
  }
  return s;
}

}  // namespace nopo
