#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "obdlab/domain.hpp"
#include "obdlab/numeric.hpp"
#include "obdlab/rng.hpp"
#include "obdlab/samplers.hpp"
#include "obdlab/summary.hpp"

// AT/AE design: Weibull margins, a cure fraction (1 - pi) for efficacy,
// Clayton-type joint survival for susceptible patients, and the ratio of
// restricted mean survival times as the dose criterion.
namespace obdlab::atae {

struct AtaeParams {
  double lambda_T = 0.1, alpha_T = 1.0, beta_T = 0.1;
  double lambda_E = 0.1, alpha_E = 1.0, beta_E = 0.1;
  double pi = 0.8;   // susceptible (can respond) fraction
  double phi = 1.0;  // copula parameter; large phi -> independence
};

inline const std::vector<std::string>& param_names() {
  static const std::vector<std::string> names{"lambda_T", "alpha_T", "beta_T", "lambda_E",
                                              "alpha_E",  "beta_E",  "pi",     "phi"};
  return names;
}

/// Truncated Gamma(shape, rate) priors on the Weibull parameters,
/// uniform priors on pi and phi.
struct AtaePrior {
  double shape = 0.1;
  double rate = 0.1;
  // Upper bounds in parameter order (lambda_T, alpha_T, beta_T, lambda_E, alpha_E, beta_E).
  std::array<double, 6> upper{2.0, 3.0, 1.0, 3.0, 4.0, 1.0};
  double pi_lo = 0.6, pi_hi = 1.0;
  double phi_lo = 0.0, phi_hi = 5.0;
};

namespace detail {

struct Bounded {
  double value;
  double log_value_minus_lo;  // log(value - lo)
  double log_jacobian;
};

// value = lo + (hi - lo) * logistic(u), computed without underflow in the log.
inline Bounded to_bounded(double u, double lo, double hi) {
  const double ls = log_logistic(u);
  const double l1s = log_logistic(-u);
  const double log_width = std::log(hi - lo);
  return {lo + (hi - lo) * obdlab::logistic(u), log_width + ls, log_width + ls + l1s};
}

inline double to_unconstrained(double x, double lo, double hi) { return obdlab::logit((x - lo) / (hi - lo)); }

// log(e^a + e^b - 1) for a, b >= 0.
inline double log_clayton_sum(double a, double b) {
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi) * -std::expm1(-lo));
}

}  // namespace detail

inline AtaeParams from_unconstrained(std::span<const double> u, const AtaePrior& pr = {}) {
  AtaeParams p;
  p.lambda_T = detail::to_bounded(u[0], 0.0, pr.upper[0]).value;
  p.alpha_T = detail::to_bounded(u[1], 0.0, pr.upper[1]).value;
  p.beta_T = detail::to_bounded(u[2], 0.0, pr.upper[2]).value;
  p.lambda_E = detail::to_bounded(u[3], 0.0, pr.upper[3]).value;
  p.alpha_E = detail::to_bounded(u[4], 0.0, pr.upper[4]).value;
  p.beta_E = detail::to_bounded(u[5], 0.0, pr.upper[5]).value;
  p.pi = detail::to_bounded(u[6], pr.pi_lo, pr.pi_hi).value;
  p.phi = detail::to_bounded(u[7], pr.phi_lo, pr.phi_hi).value;
  return p;
}

inline std::vector<double> to_unconstrained(const AtaeParams& p, const AtaePrior& pr = {}) {
  return {detail::to_unconstrained(p.lambda_T, 0.0, pr.upper[0]),
          detail::to_unconstrained(p.alpha_T, 0.0, pr.upper[1]),
          detail::to_unconstrained(p.beta_T, 0.0, pr.upper[2]),
          detail::to_unconstrained(p.lambda_E, 0.0, pr.upper[3]),
          detail::to_unconstrained(p.alpha_E, 0.0, pr.upper[4]),
          detail::to_unconstrained(p.beta_E, 0.0, pr.upper[5]),
          detail::to_unconstrained(p.pi, pr.pi_lo, pr.pi_hi),
          detail::to_unconstrained(p.phi, pr.phi_lo, pr.phi_hi)};
}

inline double cumulative_hazard(double t, double dose, double lambda, double alpha, double beta) {
  if (t <= 0.0) return 0.0;
  return lambda * std::pow(t, alpha) * std::exp(beta * dose);
}

inline double log_hazard(double t, double dose, double lambda, double alpha, double beta) {
  return std::log(lambda) + std::log(alpha) + (alpha - 1.0) * std::log(t) + beta * dose;
}

inline double weibull_survival(double t, double dose, double lambda, double alpha, double beta) {
  return std::exp(-cumulative_hazard(t, dose, lambda, alpha, beta));
}

/// Population efficacy survival including the non-susceptible fraction.
inline double cure_survival(double s_E, double pi) { return 1.0 - pi + pi * s_E; }

/// Joint survival of susceptible patients and its derivatives at (tT, tE).
struct JointSurvival {
  double S = 1.0;
  double log_S = 0.0;
  double dS_dtT = 0.0;
  double dS_dtE = 0.0;
  double d2S = 0.0;
};

inline JointSurvival joint_survival_terms(double tT, double tE, double dose, const AtaeParams& p) {
  const double HT = cumulative_hazard(tT, dose, p.lambda_T, p.alpha_T, p.beta_T);
  const double HE = cumulative_hazard(tE, dose, p.lambda_E, p.alpha_E, p.beta_E);
  const double a = HT / p.phi;
  const double b = HE / p.phi;
  const double K = detail::log_clayton_sum(a, b);
  JointSurvival js;
  js.log_S = -p.phi * K;
  js.S = std::exp(js.log_S);
  const double hT = tT > 0.0 ? std::exp(log_hazard(tT, dose, p.lambda_T, p.alpha_T, p.beta_T)) : 0.0;
  const double hE = tE > 0.0 ? std::exp(log_hazard(tE, dose, p.lambda_E, p.alpha_E, p.beta_E)) : 0.0;
  const double wT = std::exp(a - K);
  const double wE = std::exp(b - K);
  js.dS_dtT = -js.S * wT * hT;
  js.dS_dtE = -js.S * wE * hE;
  js.d2S = (1.0 + 1.0 / p.phi) * js.S * wT * wE * hT * hE;
  return js;
}

inline double joint_survival(double tT, double tE, double dose, const AtaeParams& p) {
  return joint_survival_terms(tT, tE, dose, p).S;
}

struct Observation {
  std::size_t dose_index = 0;
  double y_T = 0.0;
  bool delta_T = false;
  double y_E = 0.0;
  bool delta_E = false;
};

struct Data {
  std::vector<double> covariates;
  std::vector<Observation> obs;
};

/// Efficacy is censored at min(followup, DLT time).
inline Observation to_observation(const PatientRecord& r) {
  Observation o;
  o.dose_index = r.dose_index;
  o.delta_T = r.has_tox();
  o.y_T = r.has_tox() ? *r.tox_time : r.followup;
  o.delta_E = r.has_eff();
  o.y_E = r.has_eff() ? *r.eff_time : o.y_T;
  return o;
}

inline Data prepare(std::span<const PatientRecord> records, const TrialConfig& cfg) {
  Data d;
  d.covariates.resize(cfg.grid.size());
  for (std::size_t j = 0; j < d.covariates.size(); ++j) d.covariates[j] = cfg.covariate(j);
  for (const auto& r : records) d.obs.push_back(to_observation(r));
  return d;
}

/// Log of the L1..L4 contribution for one patient.
inline double log_contribution(const Observation& o, double dose, const AtaeParams& p) {
  const double HT = cumulative_hazard(o.y_T, dose, p.lambda_T, p.alpha_T, p.beta_T);
  const double HE = cumulative_hazard(o.y_E, dose, p.lambda_E, p.alpha_E, p.beta_E);
  const double a = HT / p.phi;
  const double b = HE / p.phi;
  const double K = detail::log_clayton_sum(a, b);
  const double log_S = -p.phi * K;
  if (o.delta_T && o.delta_E) {
    return std::log(p.pi) + std::log1p(1.0 / p.phi) + log_S + (a - K) + (b - K) +
           log_hazard(o.y_T, dose, p.lambda_T, p.alpha_T, p.beta_T) +
           log_hazard(o.y_E, dose, p.lambda_E, p.alpha_E, p.beta_E);
  }
  if (o.delta_T) {
    const double mix = (1.0 - p.pi) * std::exp(-HT) + p.pi * std::exp(log_S + a - K);
    return log_hazard(o.y_T, dose, p.lambda_T, p.alpha_T, p.beta_T) + std::log(mix);
  }
  if (o.delta_E) {
    return std::log(p.pi) + log_S + (b - K) + log_hazard(o.y_E, dose, p.lambda_E, p.alpha_E, p.beta_E);
  }
  return std::log((1.0 - p.pi) * std::exp(-HT) + p.pi * std::exp(log_S));
}

inline double log_likelihood(const Data& data, const AtaeParams& p) {
  double ll = 0.0;
  for (const auto& o : data.obs) {
    const double c = log_contribution(o, data.covariates[o.dose_index], p);
    if (std::isnan(c) || c == kNegInf) return kNegInf;
    ll += c;
  }
  return ll;
}

inline double log_prior(std::span<const double> u, const AtaePrior& pr) {
  double lp = 0.0;
  for (std::size_t k = 0; k < 6; ++k) {
    const auto b = detail::to_bounded(u[k], 0.0, pr.upper[k]);
    // Gamma(shape, rate) density in x, then change of variables to u.
    lp += (pr.shape - 1.0) * b.log_value_minus_lo - pr.rate * b.value + b.log_jacobian;
  }
  lp += detail::to_bounded(u[6], pr.pi_lo, pr.pi_hi).log_jacobian;
  lp += detail::to_bounded(u[7], pr.phi_lo, pr.phi_hi).log_jacobian;
  return lp;
}

inline mcmc::PosteriorDraws fit(const Data& data, mcmc::McmcConfig cfg, StreamRng& rng, const AtaePrior& prior = {}) {
  if (cfg.init.empty()) cfg.init = to_unconstrained(AtaeParams{}, prior);
  if (cfg.step_scales.empty()) cfg.step_scales.assign(8, 1.0);
  auto target = [&](std::span<const double> u) {
    const double lp = log_prior(u, prior);
    if (!std::isfinite(lp)) return kNegInf;
    return lp + log_likelihood(data, from_unconstrained(u, prior));
  };
  return mcmc::run_mwg(target, cfg, rng, param_names());
}

/// Restricted mean survival over [0, tau] of a Weibull margin with
/// cumulative hazard rate lambda_eff * t^alpha:
///   alpha^-1 lambda_eff^(-1/alpha) * lower_gamma(1/alpha, lambda_eff tau^alpha).
inline double weibull_rmst(double lambda_eff, double alpha, double tau) {
  const double a = 1.0 / alpha;
  const double x = lambda_eff * std::pow(tau, alpha);
  if (x < a + 1.0) {
    // Series of the lower incomplete gamma with the prefactor folded in:
    // tau * e^-x * sum_k x^k / ((a+1)...(a+k)); avoids lambda_eff^(-1/alpha) overflow.
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 100000; ++k) {
      term *= x / (a + k);
      sum += term;
      if (term < 1e-17 * sum) break;
    }
    return tau * std::exp(-x) * sum;
  }
  const double log_lower = std::log(boost::math::gamma_p(a, x)) + boost::math::lgamma(a);
  return std::exp(-std::log(alpha) - a * std::log(lambda_eff) + log_lower);
}

struct AucParts {
  double A_T = 0.0;
  double A_E = 0.0;
  [[nodiscard]] double ratio() const { return A_T / A_E; }
};

inline AucParts auc_parts(double dose, const AtaeParams& p, double tau) {
  AucParts r;
  r.A_T = weibull_rmst(p.lambda_T * std::exp(p.beta_T * dose), p.alpha_T, tau);
  r.A_E = (1.0 - p.pi) * tau + p.pi * weibull_rmst(p.lambda_E * std::exp(p.beta_E * dose), p.alpha_E, tau);
  return r;
}

inline double auc_ratio(double dose, const AtaeParams& p, double tau) { return auc_parts(dose, p, tau).ratio(); }

inline double pi_T(double dose, const AtaeParams& p, double tau) {
  return -std::expm1(-cumulative_hazard(tau, dose, p.lambda_T, p.alpha_T, p.beta_T));
}

inline double pi_E(double dose, const AtaeParams& p, double tau) {
  return p.pi * -std::expm1(-cumulative_hazard(tau, dose, p.lambda_E, p.alpha_E, p.beta_E));
}

inline PosteriorSummary summaries(const mcmc::PosteriorDraws& draws, const TrialConfig& cfg,
                                  const AtaePrior& prior = {}) {
  const std::size_t J = cfg.grid.size();
  const std::size_t n = draws.size();
  std::vector<CurvePoint> pts(n * J);
  std::vector<double> mtd(n), deff(n);
  const double log_tau = std::log(cfg.tau);
  for (std::size_t i = 0; i < n; ++i) {
    const AtaeParams p = from_unconstrained(draws.row(i), prior);
    for (std::size_t j = 0; j < J; ++j) {
      const double d = cfg.covariate(j);
      CurvePoint& c = pts[i * J + j];
      c.pi_T = pi_T(d, p, cfg.tau);
      c.pi_E = pi_E(d, p, cfg.tau);
      c.criterion = auc_ratio(d, p, cfg.tau);
    }
    mtd[i] = (std::log(-std::log1p(-cfg.pi_T_star)) - std::log(p.lambda_T) - p.alpha_T * log_tau) / p.beta_T /
             cfg.dose_scale;
    deff[i] = p.pi > cfg.pi_E_star
                  ? (std::log(-std::log1p(-cfg.pi_E_star / p.pi)) - std::log(p.lambda_E) - p.alpha_E * log_tau) /
                        p.beta_E / cfg.dose_scale
                  : std::numeric_limits<double>::infinity();
  }
  PosteriorSummary s = summarize_curves(pts, J, cfg);
  auto safe_cv = [](const std::vector<double>& v) {
    for (double x : v)
      if (!std::isfinite(x)) return std::numeric_limits<double>::infinity();
    try {
      return mcmc::robust_cv(v);
    } catch (const std::domain_error&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  s.cv_mtd = safe_cv(mtd);
  s.cv_dose_eff = safe_cv(deff);
  return s;
}

}  // namespace obdlab::atae
