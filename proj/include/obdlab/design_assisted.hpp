#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "obdlab/domain.hpp"
#include "obdlab/numeric.hpp"
#include "obdlab/rng.hpp"
#include "obdlab/samplers.hpp"
#include "obdlab/summary.hpp"

// Model-assisted comparator: per-dose Beta increments build monotone
// toxicity and efficacy curves without a parametric dose-response model.
namespace obdlab::assisted {

struct BetaWalkPrior {
  std::vector<double> a_T{0.05, 0.1, 0.2, 0.25, 0.3, 0.35};
  std::vector<double> b_T{0.95, 0.9, 0.8, 0.75, 0.7, 0.65};
  std::vector<double> a_E{0.2, 0.3, 0.4, 0.45, 0.5, 0.6};
  std::vector<double> b_E{0.95, 0.9, 0.8, 0.75, 0.7, 0.65};

  void validate(std::size_t n_doses) const {
    for (const auto* v : {&a_T, &b_T, &a_E, &b_E}) {
      if (v->size() != n_doses) throw std::invalid_argument("beta-walk prior length must match the dose grid");
      for (double x : *v)
        if (!(x > 0.0)) throw std::invalid_argument("beta-walk hyperparameters must be positive");
    }
  }
};

struct BetaWalkParams {
  std::vector<double> beta_T;
  std::vector<double> beta_E;

  /// Sampler scale is (logit beta_T[0..J), logit beta_E[0..J)).
  static BetaWalkParams from_unconstrained(std::span<const double> u) {
    const std::size_t J = u.size() / 2;
    BetaWalkParams p;
    p.beta_T.resize(J);
    p.beta_E.resize(J);
    for (std::size_t j = 0; j < J; ++j) {
      p.beta_T[j] = obdlab::logistic(u[j]);
      p.beta_E[j] = obdlab::logistic(u[J + j]);
    }
    return p;
  }
};

/// p_j = 1 - prod_{r<=j} (1 - beta_r).
inline std::vector<double> cumulative_probs(std::span<const double> betas) {
  std::vector<double> p(betas.size());
  double prev = 0.0;
  for (std::size_t j = 0; j < betas.size(); ++j) {
    prev = prev + (1.0 - prev) * betas[j];
    p[j] = prev;
  }
  return p;
}

struct Observation {
  std::size_t dose_index = 0;
  bool y_T = false;
  bool y_E = false;
};

/// Binary snapshot: an event counts once it has been observed.
inline std::vector<Observation> prepare(std::span<const PatientRecord> records) {
  std::vector<Observation> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back({r.dose_index, r.has_tox(), r.has_eff()});
  return out;
}

namespace detail {
// log p_j and log(1 - p_j) from the increments, accumulated in log space.
inline void log_probs(std::span<const double> betas, std::vector<double>& log_p, std::vector<double>& log_q) {
  const std::size_t J = betas.size();
  log_p.resize(J);
  log_q.resize(J);
  double lq = 0.0;
  for (std::size_t j = 0; j < J; ++j) {
    lq += std::log1p(-betas[j]);
    log_q[j] = lq;
    log_p[j] = std::log(-std::expm1(lq));
  }
}
}  // namespace detail

inline double log_likelihood(std::span<const Observation> data, const BetaWalkParams& p) {
  std::vector<double> lpT, lqT, lpE, lqE;
  detail::log_probs(p.beta_T, lpT, lqT);
  detail::log_probs(p.beta_E, lpE, lqE);
  double ll = 0.0;
  for (const auto& o : data) {
    ll += o.y_T ? lpT[o.dose_index] : lqT[o.dose_index];
    ll += o.y_E ? lpE[o.dose_index] : lqE[o.dose_index];
  }
  return std::isnan(ll) ? kNegInf : ll;
}

/// Beta priors on each increment, expressed on the logit scale (Jacobian included).
inline double log_prior(std::span<const double> u, const BetaWalkPrior& pr) {
  const std::size_t J = pr.a_T.size();
  double lp = 0.0;
  for (std::size_t j = 0; j < J; ++j) {
    lp += pr.a_T[j] * log_logistic(u[j]) + pr.b_T[j] * log_logistic(-u[j]);
    lp += pr.a_E[j] * log_logistic(u[J + j]) + pr.b_E[j] * log_logistic(-u[J + j]);
  }
  return lp;
}

inline std::vector<std::string> param_names(std::size_t J) {
  std::vector<std::string> n;
  for (std::size_t j = 0; j < J; ++j) n.push_back("logit_beta_T" + std::to_string(j + 1));
  for (std::size_t j = 0; j < J; ++j) n.push_back("logit_beta_E" + std::to_string(j + 1));
  return n;
}

inline mcmc::PosteriorDraws fit(std::span<const Observation> data, const BetaWalkPrior& prior, mcmc::McmcConfig cfg,
                                StreamRng& rng) {
  const std::size_t J = prior.a_T.size();
  prior.validate(J);
  if (cfg.init.empty()) {
    cfg.init.resize(2 * J);
    for (std::size_t j = 0; j < J; ++j) {
      cfg.init[j] = obdlab::logit(prior.a_T[j] / (prior.a_T[j] + prior.b_T[j]));
      cfg.init[J + j] = obdlab::logit(prior.a_E[j] / (prior.a_E[j] + prior.b_E[j]));
    }
  }
  if (cfg.step_scales.empty()) cfg.step_scales.assign(2 * J, 2.0);
  auto target = [&](std::span<const double> u) {
    return log_prior(u, prior) + log_likelihood(data, BetaWalkParams::from_unconstrained(u));
  };
  return mcmc::run_mwg(target, cfg, rng, param_names(J));
}

inline PosteriorSummary summaries(const mcmc::PosteriorDraws& draws, const TrialConfig& cfg) {
  const std::size_t J = cfg.grid.size();
  const std::size_t n = draws.size();
  std::vector<CurvePoint> pts(n * J);
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = BetaWalkParams::from_unconstrained(draws.row(i));
    const auto pT = cumulative_probs(p.beta_T);
    const auto pE = cumulative_probs(p.beta_E);
    for (std::size_t j = 0; j < J; ++j) {
      CurvePoint& c = pts[i * J + j];
      c.pi_T = pT[j];
      c.pi_E = pE[j];
      c.criterion = decisions::utility(c.pi_E, c.pi_T, cfg.weights);
    }
  }
  return summarize_curves(pts, J, cfg);
}

}  // namespace obdlab::assisted
