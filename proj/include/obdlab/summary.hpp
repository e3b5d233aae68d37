#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "obdlab/domain.hpp"
#include "obdlab/numeric.hpp"
#include "obdlab/utility.hpp"

namespace obdlab {

struct DoseSummary {
  double mean_piT = 0.0;
  double mean_piE = 0.0;
  double lo_piT = 0.0, hi_piT = 0.0;  // 80% central intervals
  double lo_piE = 0.0, hi_piE = 0.0;
  double p_safe = 0.0;   // P(pi_T < pi_T*)
  double p_effic = 0.0;  // P(pi_E > pi_E*)
  double utility = 0.0;  // posterior mean utility
  double criterion = 0.0;
};

/// Per-dose posterior summary shared by all designs.
struct PosteriorSummary {
  std::vector<DoseSummary> doses;
  std::size_t n_draws = 0;
  // Robust CVs of per-draw dose-solving distributions (precision rule);
  // absent for designs without a dose-response curve.
  std::optional<double> cv_mtd;
  std::optional<double> cv_dose_eff;

  [[nodiscard]] std::size_t size() const noexcept { return doses.size(); }
};

/// Per-draw, per-dose curve values fed to summarize_curves.
struct CurvePoint {
  double pi_T = 0.0;
  double pi_E = 0.0;
  double criterion = 0.0;
};

/// Builds a PosteriorSummary from per-draw curve values laid out as
/// points[draw * n_doses + dose].
inline PosteriorSummary summarize_curves(std::span<const CurvePoint> points, std::size_t n_doses,
                                         const TrialConfig& cfg) {
  PosteriorSummary s;
  s.n_draws = n_doses == 0 ? 0 : points.size() / n_doses;
  s.doses.resize(n_doses);
  if (s.n_draws == 0) throw std::invalid_argument("summarize_curves: no draws");
  std::vector<double> t(s.n_draws), e(s.n_draws);
  for (std::size_t j = 0; j < n_doses; ++j) {
    double safe = 0.0, effic = 0.0, util = 0.0, crit = 0.0;
    for (std::size_t i = 0; i < s.n_draws; ++i) {
      const CurvePoint& c = points[i * n_doses + j];
      t[i] = c.pi_T;
      e[i] = c.pi_E;
      safe += c.pi_T < cfg.pi_T_star ? 1.0 : 0.0;
      effic += c.pi_E > cfg.pi_E_star ? 1.0 : 0.0;
      util += decisions::utility(c.pi_E, c.pi_T, cfg.weights);
      crit += c.criterion;
    }
    const double n = static_cast<double>(s.n_draws);
    DoseSummary& d = s.doses[j];
    d.mean_piT = mean(t);
    d.mean_piE = mean(e);
    d.lo_piT = quantile(t, 0.1);
    d.hi_piT = quantile(t, 0.9);
    d.lo_piE = quantile(e, 0.1);
    d.hi_piE = quantile(e, 0.9);
    d.p_safe = safe / n;
    d.p_effic = effic / n;
    d.utility = util / n;
    d.criterion = crit / n;
  }
  return s;
}

inline void to_json(json& j, const DoseSummary& d) {
  j = json{{"mean_piT", d.mean_piT}, {"mean_piE", d.mean_piE}, {"lo_piT", d.lo_piT},
           {"hi_piT", d.hi_piT},     {"lo_piE", d.lo_piE},     {"hi_piE", d.hi_piE},
           {"p_safe", d.p_safe},     {"p_effic", d.p_effic},   {"utility", d.utility},
           {"criterion", d.criterion}};
}

inline void from_json(const json& j, DoseSummary& d) {
  d.mean_piT = j.at("mean_piT").get<double>();
  d.mean_piE = j.at("mean_piE").get<double>();
  d.lo_piT = j.value("lo_piT", 0.0);
  d.hi_piT = j.value("hi_piT", 0.0);
  d.lo_piE = j.value("lo_piE", 0.0);
  d.hi_piE = j.value("hi_piE", 0.0);
  d.p_safe = j.at("p_safe").get<double>();
  d.p_effic = j.at("p_effic").get<double>();
  d.utility = j.value("utility", 0.0);
  d.criterion = j.value("criterion", d.utility);
}

inline void to_json(json& j, const PosteriorSummary& s) {
  j = json{{"doses", s.doses}, {"n_draws", s.n_draws}};
  j["cv_mtd"] = s.cv_mtd ? json(*s.cv_mtd) : json(nullptr);
  j["cv_dose_eff"] = s.cv_dose_eff ? json(*s.cv_dose_eff) : json(nullptr);
}

inline void from_json(const json& j, PosteriorSummary& s) {
  j.at("doses").get_to(s.doses);
  s.n_draws = j.value("n_draws", std::size_t{0});
  s.cv_mtd.reset();
  s.cv_dose_eff.reset();
  if (j.contains("cv_mtd") && !j["cv_mtd"].is_null()) s.cv_mtd = j["cv_mtd"].get<double>();
  if (j.contains("cv_dose_eff") && !j["cv_dose_eff"].is_null()) s.cv_dose_eff = j["cv_dose_eff"].get<double>();
}

}  // namespace obdlab
