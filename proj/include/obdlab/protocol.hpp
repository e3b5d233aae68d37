#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "obdlab/decisions.hpp"
#include "obdlab/design_assisted.hpp"
#include "obdlab/design_atae.hpp"
#include "obdlab/design_jtc.hpp"
#include "obdlab/domain.hpp"
#include "obdlab/rng.hpp"
#include "obdlab/samplers.hpp"
#include "obdlab/summary.hpp"

// One decision step of the common trial procedure, shared by the simulator
// and the live conduct service.
namespace obdlab {

enum class Design { JTC, JCRM, ATAE, Assisted };

inline const char* to_string(Design d) noexcept {
  switch (d) {
    case Design::JTC: return "jtc";
    case Design::JCRM: return "jcrm";
    case Design::ATAE: return "atae";
    case Design::Assisted: return "assisted";
  }
  return "jtc";
}

inline Design design_from_string(const std::string& s) {
  if (s == "jtc") return Design::JTC;
  if (s == "jcrm") return Design::JCRM;
  if (s == "atae") return Design::ATAE;
  if (s == "assisted") return Design::Assisted;
  throw std::invalid_argument("unknown design: " + s);
}

inline constexpr Design kAllDesigns[] = {Design::JTC, Design::JCRM, Design::ATAE, Design::Assisted};

struct DesignPriors {
  jtc::JtcPrior jtc;
  atae::AtaePrior atae;
  assisted::BetaWalkPrior assisted;
};

inline PosteriorSummary fit_and_summarize(Design design, std::span<const PatientRecord> records,
                                          const TrialConfig& cfg, const mcmc::McmcConfig& mc, StreamRng& rng,
                                          const DesignPriors& priors = {}) {
  switch (design) {
    case Design::JTC:
    case Design::JCRM: {
      const auto mode = design == Design::JTC ? jtc::WeightMode::TITE : jtc::WeightMode::Binary;
      const auto data = jtc::prepare(records, cfg, mode);
      return jtc::summaries(jtc::fit(data, priors.jtc, mc, rng), cfg);
    }
    case Design::ATAE: {
      const auto data = atae::prepare(records, cfg);
      return atae::summaries(atae::fit(data, mc, rng, priors.atae), cfg, priors.atae);
    }
    case Design::Assisted: {
      const auto data = assisted::prepare(records);
      return assisted::summaries(assisted::fit(data, priors.assisted, mc, rng), cfg);
    }
  }
  throw std::logic_error("unhandled design");
}

struct Analysis {
  double time = 0.0;
  bool model_based = false;
  std::optional<PosteriorSummary> summary;
  std::vector<std::size_t> admissible;
  std::vector<double> criterion;
  decisions::RuleVerdict verdict;
  std::optional<std::size_t> next_dose;
};

/// Runs one analysis on the current records and updates the sticky parts
/// of `state` (hard-safety cutoff, run-in flag, admissible set, history).
inline Analysis decide(Design design, decisions::TrialState& state, const TrialConfig& cfg,
                       const mcmc::McmcConfig& mc, StreamRng rng, const DesignPriors& priors = {}) {
  using namespace decisions;
  const std::size_t J = cfg.grid.size();
  Analysis a;
  a.time = state.now;

  const auto counts = cycle1_counts(state.records, J);
  if (auto cut = hard_safety_cutoff(counts, cfg.zeta, cfg.cycle1_tox_limit))
    if (!state.excluded_from || *cut < *state.excluded_from) state.excluded_from = cut;

  auto excluded = [&] {
    std::vector<std::size_t> e;
    if (state.excluded_from)
      for (std::size_t j = *state.excluded_from; j < J; ++j) e.push_back(j);
    return e;
  };

  const auto highest = state.highest_tried();
  if (state.run_in && (!highest || (!state.any_dlt() && *highest + 1 < J))) {
    a.verdict.excluded_doses = excluded();
    if (state.excluded_from && *state.excluded_from == 0) {
      a.verdict.stop = true;
      a.verdict.reason = StopReason::HardSafety;
    } else if (state.n_patients() >= cfg.n_max) {
      a.verdict.stop = true;
      a.verdict.reason = StopReason::MaxPatients;
    } else {
      a.next_dose = highest ? *highest + 1 : 0;
    }
    state.recommendations.push_back(a.next_dose);
    return a;
  }
  state.run_in = false;

  a.model_based = true;
  a.summary = fit_and_summarize(design, state.records, cfg, mc, rng, priors);
  for (std::size_t j : admissible_set(*a.summary, cfg))
    if (!state.excluded_from || j < *state.excluded_from) a.admissible.push_back(j);
  a.criterion = criterion_of(*a.summary);
  const auto candidate = select_next_dose(a.admissible, a.criterion, state.excluded_from, highest, cfg);
  a.verdict = stopping_check({state, *a.summary, a.admissible, candidate, design != Design::Assisted}, cfg);
  if (!a.verdict.stop) a.next_dose = candidate;
  state.admissible = a.admissible;
  state.recommendations.push_back(a.next_dose);
  return a;
}

inline json analysis_json(const Analysis& a, const TrialConfig& cfg) {
  json j{{"time", a.time},
         {"model_based", a.model_based},
         {"admissible", a.admissible},
         {"criterion", a.criterion},
         {"verdict", decisions::verdict_json(a.time, a.verdict)}};
  j["summary"] = a.summary ? json(*a.summary) : json(nullptr);
  j["next_dose"] = a.next_dose ? json(*a.next_dose) : json(nullptr);
  j["next_dose_value"] = a.next_dose ? json(cfg.grid[*a.next_dose]) : json(nullptr);
  return j;
}

}  // namespace obdlab
