#pragma once

namespace obdlab::decisions {

struct UtilityWeights {
  double omega1 = 1.0 / 3.0;
  double omega2 = 1.09;
  double phi_T = 0.391;
};

/// Linear efficacy-toxicity trade-off with an extra penalty once the
/// toxicity probability exceeds phi_T.
inline double utility(double pi_E, double pi_T, double omega1, double omega2, double phi_T) noexcept {
  return pi_E - omega1 * pi_T - (pi_T > phi_T ? omega2 * pi_T : 0.0);
}

inline double utility(double pi_E, double pi_T, const UtilityWeights& w) noexcept {
  return utility(pi_E, pi_T, w.omega1, w.omega2, w.phi_T);
}

}  // namespace obdlab::decisions
