#pragma once

#include <cmath>
#include <ostream>
#include <random>
#include <stdexcept>
#include <utility>

#include <boost/math/distributions/normal.hpp>

#include "obdlab/domain.hpp"
#include "obdlab/rng.hpp"

namespace obdlab::datagen {

struct LognormalParams {
  double mu = 0.0;
  double sigma = 1.0;
};

struct LognormalPair {
  LognormalParams tox;
  LognormalParams eff;
  double rho = -0.5;  // correlation of (log t_T, log t_E)

  void validate() const {
    if (!(tox.sigma > 0.0) || !(eff.sigma > 0.0)) throw std::invalid_argument("lognormal scales must be positive");
    if (!(rho > -1.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in (-1,1)");
  }
};

inline double std_normal_quantile(double p) {
  static const boost::math::normal_distribution<double> unit;
  return boost::math::quantile(unit, p);
}

inline double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline double lognormal_cdf(double t, const LognormalParams& p) {
  if (t <= 0.0) return 0.0;
  return std_normal_cdf((std::log(t) - p.mu) / p.sigma);
}

/// Lognormal whose CDF passes through (t_early, p_early) and (t_full, p_full).
inline LognormalParams match_lognormal(double p_early, double p_full, double t_early, double t_full) {
  if (!(p_early > 0.0 && p_early < p_full && p_full < 1.0))
    throw std::invalid_argument("match_lognormal requires 0 < p_early < p_full < 1");
  if (!(t_early > 0.0 && t_early < t_full))
    throw std::invalid_argument("match_lognormal requires 0 < t_early < t_full");
  const double z_early = std_normal_quantile(p_early);
  const double z_full = std_normal_quantile(p_full);
  LognormalParams out;
  out.sigma = std::log(t_full / t_early) / (z_full - z_early);
  out.mu = std::log(t_early) - out.sigma * z_early;
  return out;
}

/// Marginals for one dose of a scenario: toxicity matched at (1, tau) cycles
/// to (cycle-1, full) probabilities, efficacy likewise with the pattern's
/// cycle-1 fraction.
inline LognormalPair dose_truth(const Scenario& s, std::size_t j, double tau, double rho = -0.5) {
  LognormalPair lp;
  lp.tox = match_lognormal(s.tox_cycle1.at(j), s.tox_full.at(j), 1.0, tau);
  lp.eff = match_lognormal(s.eff_cycle1(j), s.eff_full.at(j), 1.0, tau);
  lp.rho = rho;
  lp.validate();
  return lp;
}

struct EventTimes {
  double tox = 0.0;
  double eff = 0.0;
};

inline EventTimes sample_event_times(const LognormalPair& lp, StreamRng& rng) {
  std::normal_distribution<double> z;
  const double z1 = z(rng);
  const double z2 = z(rng);
  const double log_t = lp.tox.mu + lp.tox.sigma * z1;
  const double log_e = lp.eff.mu + lp.eff.sigma * (lp.rho * z1 + std::sqrt(1.0 - lp.rho * lp.rho) * z2);
  return {std::exp(log_t), std::exp(log_e)};
}

inline EventTimes sample_event_times(const Scenario& s, std::size_t dose_index, double tau, StreamRng& rng,
                                     double rho = -0.5) {
  return sample_event_times(dose_truth(s, dose_index, tau, rho), rng);
}

/// Observed state after `followup` cycles. A DLT ends follow-up and censors
/// efficacy at the DLT time.
inline PatientRecord observe(const EventTimes& t, double followup, double tau) {
  if (!(followup >= 0.0 && followup <= tau)) throw std::invalid_argument("followup must lie in [0, tau]");
  PatientRecord r;
  if (t.tox <= followup) {
    r.tox_time = t.tox;
    r.left_trial = true;
    r.followup = t.tox;
    if (t.eff <= t.tox) r.eff_time = t.eff;
  } else {
    r.followup = followup;
    if (t.eff <= followup) r.eff_time = t.eff;
  }
  return r;
}

inline void write_patient_csv_header(std::ostream& os) {
  os << "rep,patient,dose,entry,t_tox,t_eff,observed_tox,observed_eff,followup\n";
}

inline void write_patient_csv_row(std::ostream& os, std::size_t rep, std::size_t patient, double dose,
                                  double entry, const EventTimes& t, const PatientRecord& r) {
  os << rep << ',' << patient << ',' << dose << ',' << entry << ',' << t.tox << ',' << t.eff << ','
     << (r.has_tox() ? 1 : 0) << ',' << (r.has_eff() ? 1 : 0) << ',' << r.followup << '\n';
}

}  // namespace obdlab::datagen
