#include "nopo/analytics.hpp"

#include <cmath>

namespace nopo {

namespace {
void require_locked_above(const Params& p) {
  validate(p);
  if (!p.symmetric())
    throw std::invalid_argument("correlators: requires symmetric parameters");
  if (p.chi == 0.0 || p.delta1 == 0.0)
    throw std::invalid_argument(
        "correlators singular: requires chi > 0 and nonzero detuning");
  if (!is_phase_locked(p))
    throw std::invalid_argument("correlators: requires phase locking");
  if (!(p.eps() > threshold_eps(p)))
    throw std::invalid_argument("correlators: requires eps > eps_th");
}
}  // namespace

QuadCorrelators correlators_above(const Params& p) {
  require_locked_above(p);
  const double gamma = p.gamma1, lam = p.lambda();
  const double ad = std::abs(p.delta1), sgn = (p.delta1 > 0.0) ? 1.0 : -1.0;
  const double u = p.chi - ad;  // chi - |delta|
  const double n0 = steady_state(p).n0;

  QuadCorrelators c;
  const double gp = gamma + lam * n0;
  const double fp = 1.0 / (4.0 * lam * n0 * gp);
  c.plus(0, 0) = fp * 4.0 * n0 * (gamma * gp + u * u);
  c.plus(0, 1) = fp * (-lam * n0 * u * sgn);
  c.plus(1, 0) = fp * (-2.0 * lam * n0 * u * sgn);
  c.plus(1, 1) = fp * (-lam * gamma);

  const double fm = 1.0 / (4.0 * ad * p.chi);
  c.minus(0, 0) = fm * 4.0 * n0 * p.chi * u;
  c.minus(0, 1) = fm * 2.0 * p.chi * gamma * sgn;
  c.minus(1, 0) = c.minus(0, 1);
  c.minus(1, 1) = fm * (gamma * gamma - ad * u) / n0;
  return c;
}

PhotonStatistics photon_number_statistics(const Params& p) {
  require_locked_above(p);
  const QuadCorrelators c = correlators_above(p);
  const double n0 = steady_state(p).n0;
  const double ad = std::abs(p.delta1);

  PhotonStatistics s{};
  // R = 2 n0 + <dn-^2> = n0 (|delta| + chi)/|delta|.
  s.R = 2.0 * n0 + c.minus(0, 0);
  s.R_N = s.R / (2.0 * n0);
  s.g = n0 * n0 + 0.25 * (c.plus(0, 0) + c.minus(0, 0));
  s.g12 = s.g + 0.5 * n0 * (1.0 - p.chi / ad);
  return s;
}

}  // namespace nopo
