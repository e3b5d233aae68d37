#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "obdlab/domain.hpp"
#include "obdlab/numeric.hpp"
#include "obdlab/rng.hpp"
#include "obdlab/samplers.hpp"
#include "obdlab/summary.hpp"

// Joint TITE-CRM: weighted logistic marginals for efficacy and toxicity tied
// together by a Gumbel association. The Joint CRM is the same model with all
// weights fixed at 1.
namespace obdlab::jtc {

enum class WeightMode { TITE, Binary };

struct JtcParams {
  double beta_T0 = 0.0;
  double beta_T1 = 1.0;
  double beta_E0 = 0.0;
  double beta_E1 = 1.0;
  double psi = 0.0;

  /// From the sampler scale (beta_T0, log beta_T1, beta_E0, log beta_E1, psi).
  static JtcParams from_unconstrained(std::span<const double> u) {
    return {u[0], std::exp(u[1]), u[2], std::exp(u[3]), u[4]};
  }
};

inline const std::vector<std::string>& param_names() {
  static const std::vector<std::string> names{"beta_T0", "log_beta_T1", "beta_E0", "log_beta_E1", "psi"};
  return names;
}

/// Independent normals on (beta0, log beta1) per outcome and on psi.
struct JtcPrior {
  double c1_T = std::log(1.0 / 16.0);
  double c2_T = std::log(1.0 / 4.0);
  double v1_T = 1.0;
  double v2_T = 2.0;
  double c1_E = -3.0;
  double c2_E = -0.2;
  double v1_E = 1.0;
  double v2_E = 1.0;
  double psi_mean = 0.0;
  double psi_var = 100.0;
};

inline double logistic(double dose, double beta0, double beta1) noexcept {
  return obdlab::logistic(beta0 + beta1 * dose);
}

struct Weights {
  double w_E = 1.0;
  double w_T = 1.0;
};

inline Weights compute_weights(const PatientRecord& r, double tau, WeightMode mode) {
  if (mode == WeightMode::Binary) return {1.0, 1.0};
  const double frac = std::min(r.followup / tau, 1.0);
  Weights w;
  w.w_T = r.has_tox() ? 1.0 : frac;
  if (r.has_eff()) {
    w.w_E = 1.0;
  } else if (r.has_tox()) {
    w.w_E = std::min(*r.tox_time / tau, 1.0);
  } else {
    w.w_E = frac;
  }
  return w;
}

/// Cell probabilities pi_{a,b}: a = efficacy observed, b = toxicity observed.
struct GumbelCells {
  double p00 = 0.0, p01 = 0.0, p10 = 0.0, p11 = 0.0;

  [[nodiscard]] double at(int a, int b) const noexcept {
    if (a == 0) return b == 0 ? p00 : p01;
    return b == 0 ? p10 : p11;
  }
};

inline GumbelCells gumbel_cells(double gE, double gT, double psi) noexcept {
  const double assoc = gE * (1.0 - gE) * gT * (1.0 - gT) * std::tanh(0.5 * psi);
  auto clip = [](double p) { return (p < 0.0 && p > -1e-12) ? 0.0 : p; };
  GumbelCells c;
  c.p00 = clip((1.0 - gE) * (1.0 - gT) + assoc);
  c.p01 = clip((1.0 - gE) * gT - assoc);
  c.p10 = clip(gE * (1.0 - gT) - assoc);
  c.p11 = clip(gE * gT + assoc);
  return c;
}

struct Observation {
  std::size_t dose_index = 0;
  Weights w;
  bool eff = false;
  bool tox = false;
};

/// Likelihood inputs: model covariate per dose plus weighted outcomes.
struct Data {
  std::vector<double> covariates;
  std::vector<Observation> obs;
};

inline Data prepare(std::span<const PatientRecord> records, const TrialConfig& cfg, WeightMode mode) {
  Data d;
  d.covariates.resize(cfg.grid.size());
  for (std::size_t j = 0; j < d.covariates.size(); ++j) d.covariates[j] = cfg.covariate(j);
  d.obs.reserve(records.size());
  for (const auto& r : records)
    d.obs.push_back({r.dose_index, compute_weights(r, cfg.tau, mode), r.has_eff(), r.has_tox()});
  return d;
}

inline double log_likelihood(const Data& data, const JtcParams& p) {
  const std::size_t J = data.covariates.size();
  std::vector<double> fT(J), fE(J);
  for (std::size_t j = 0; j < J; ++j) {
    fT[j] = logistic(data.covariates[j], p.beta_T0, p.beta_T1);
    fE[j] = logistic(data.covariates[j], p.beta_E0, p.beta_E1);
  }
  double ll = 0.0;
  for (const auto& o : data.obs) {
    const double gE = o.w.w_E * fE[o.dose_index];
    const double gT = o.w.w_T * fT[o.dose_index];
    const double cell = gumbel_cells(gE, gT, p.psi).at(o.eff ? 1 : 0, o.tox ? 1 : 0);
    if (!(cell > 0.0)) return kNegInf;
    ll += std::log(cell);
  }
  return ll;
}

inline double log_prior(std::span<const double> u, const JtcPrior& pr) {
  auto lnorm = [](double x, double m, double v) { return -0.5 * (x - m) * (x - m) / v; };
  return lnorm(u[0], pr.c1_T, pr.v1_T) + lnorm(u[1], pr.c2_T, pr.v2_T) + lnorm(u[2], pr.c1_E, pr.v1_E) +
         lnorm(u[3], pr.c2_E, pr.v2_E) + lnorm(u[4], pr.psi_mean, pr.psi_var);
}

/// Posterior draws on the unconstrained scale; empty data samples the prior.
inline mcmc::PosteriorDraws fit(const Data& data, const JtcPrior& prior, mcmc::McmcConfig cfg, StreamRng& rng) {
  if (cfg.init.empty()) cfg.init = {prior.c1_T, prior.c2_T, prior.c1_E, prior.c2_E, prior.psi_mean};
  if (cfg.step_scales.empty()) cfg.step_scales = {0.7, 0.7, 0.7, 0.7, 3.0};
  auto target = [&](std::span<const double> u) {
    return log_prior(u, prior) + log_likelihood(data, JtcParams::from_unconstrained(u));
  };
  return mcmc::run_mwg(target, cfg, rng, param_names());
}

/// Continuous dose (covariate scale) at which the logistic curve equals `target`.
inline double dose_solving(double beta0, double beta1, double target) {
  return (obdlab::logit(target) - beta0) / beta1;
}

inline PosteriorSummary summaries(const mcmc::PosteriorDraws& draws, const TrialConfig& cfg) {
  const std::size_t J = cfg.grid.size();
  const std::size_t n = draws.size();
  std::vector<CurvePoint> pts(n * J);
  std::vector<double> mtd(n), deff(n);
  for (std::size_t i = 0; i < n; ++i) {
    const JtcParams p = JtcParams::from_unconstrained(draws.row(i));
    for (std::size_t j = 0; j < J; ++j) {
      CurvePoint& c = pts[i * J + j];
      c.pi_T = logistic(cfg.covariate(j), p.beta_T0, p.beta_T1);
      c.pi_E = logistic(cfg.covariate(j), p.beta_E0, p.beta_E1);
      c.criterion = decisions::utility(c.pi_E, c.pi_T, cfg.weights);
    }
    mtd[i] = dose_solving(p.beta_T0, p.beta_T1, cfg.pi_T_star) / cfg.dose_scale;
    deff[i] = dose_solving(p.beta_E0, p.beta_E1, cfg.pi_E_star) / cfg.dose_scale;
  }
  PosteriorSummary s = summarize_curves(pts, J, cfg);
  auto safe_cv = [](const std::vector<double>& v) {
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

}  // namespace obdlab::jtc
