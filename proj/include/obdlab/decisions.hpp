#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "obdlab/domain.hpp"
#include "obdlab/summary.hpp"
#include "obdlab/utility.hpp"

namespace obdlab::decisions {

enum class StopReason {
  Continue,
  NoAdmissible,
  LowestUnsafe,
  HighestVerySafe,
  SufficientInfo,
  Precision,
  HardSafety,
  MaxPatients,
};

inline const char* to_string(StopReason r) noexcept {
  switch (r) {
    case StopReason::Continue: return "Continue";
    case StopReason::NoAdmissible: return "NoAdmissible";
    case StopReason::LowestUnsafe: return "LowestUnsafe";
    case StopReason::HighestVerySafe: return "HighestVerySafe";
    case StopReason::SufficientInfo: return "SufficientInfo";
    case StopReason::Precision: return "Precision";
    case StopReason::HardSafety: return "HardSafety";
    case StopReason::MaxPatients: return "MaxPatients";
  }
  return "Continue";
}

inline StopReason stop_reason_from_string(const std::string& s) {
  for (auto r : {StopReason::Continue, StopReason::NoAdmissible, StopReason::LowestUnsafe,
                 StopReason::HighestVerySafe, StopReason::SufficientInfo, StopReason::Precision,
                 StopReason::HardSafety, StopReason::MaxPatients})
    if (s == to_string(r)) return r;
  throw std::invalid_argument("unknown stop reason: " + s);
}

/// Stops for safety or futility end without a recommended dose.
inline bool stops_without_recommendation(StopReason r) noexcept {
  return r == StopReason::HardSafety || r == StopReason::LowestUnsafe || r == StopReason::NoAdmissible;
}

struct RuleVerdict {
  bool stop = false;
  StopReason reason = StopReason::Continue;
  std::vector<std::size_t> excluded_doses;
};

// ---- trial state -----------------------------------------------------------

struct Cohort {
  std::size_t dose_index = 0;
  double entry_time = 0.0;
  std::size_t size = 0;
};

struct TrialState {
  std::vector<PatientRecord> records;
  double now = 0.0;  // calendar time of the current analysis, cycles
  bool run_in = true;
  std::optional<std::size_t> excluded_from;  // hard-safety cutoff, never lifted
  std::vector<std::size_t> admissible;
  std::vector<std::optional<std::size_t>> recommendations;

  [[nodiscard]] std::size_t n_patients() const noexcept { return records.size(); }

  [[nodiscard]] std::optional<std::size_t> highest_tried() const noexcept {
    std::optional<std::size_t> h;
    for (const auto& r : records)
      if (!h || r.dose_index > *h) h = r.dose_index;
    return h;
  }

  [[nodiscard]] bool any_dlt() const noexcept {
    return std::any_of(records.begin(), records.end(), [](const PatientRecord& r) { return r.has_tox(); });
  }
};

/// Patients entering together on the same dose, in order of entry.
inline std::vector<Cohort> cohorts_of(std::span<const PatientRecord> records) {
  std::vector<Cohort> out;
  for (const auto& r : records) {
    auto it = std::find_if(out.begin(), out.end(), [&](const Cohort& c) {
      return c.dose_index == r.dose_index && c.entry_time == r.entry_time;
    });
    if (it == out.end()) {
      out.push_back({r.dose_index, r.entry_time, 1});
    } else {
      ++it->size;
    }
  }
  return out;
}

inline std::size_t cohorts_at(std::span<const Cohort> cohorts, std::size_t dose) {
  return static_cast<std::size_t>(
      std::count_if(cohorts.begin(), cohorts.end(), [&](const Cohort& c) { return c.dose_index == dose; }));
}

// ---- cycle-1 Beta-Binomial machinery ----------------------------------------

struct BinomialCount {
  std::size_t events = 0;
  std::size_t patients = 0;
};

/// Per-dose cycle-1 DLT counts among patients evaluable for cycle 1
/// (completed one cycle or had a DLT within it).
inline std::vector<BinomialCount> cycle1_counts(std::span<const PatientRecord> records, std::size_t n_doses) {
  std::vector<BinomialCount> c(n_doses);
  for (const auto& r : records) {
    const bool dlt1 = r.tox_time && *r.tox_time <= 1.0;
    if (dlt1) {
      ++c[r.dose_index].events;
      ++c[r.dose_index].patients;
    } else if (r.followup >= 1.0 || r.has_tox()) {
      ++c[r.dose_index].patients;
    }
  }
  return c;
}

/// P(p > limit) under a Beta(1,1) prior updated with the counts.
inline double prob_exceeds(const BinomialCount& c, double limit) {
  const double a = 1.0 + static_cast<double>(c.events);
  const double b = 1.0 + static_cast<double>(c.patients - c.events);
  return boost::math::ibetac(a, b, limit);
}

/// Lowest dose index whose cycle-1 toxicity very probably exceeds `limit`;
/// it and every dose above are excluded.
inline std::optional<std::size_t> hard_safety_cutoff(std::span<const BinomialCount> counts, double zeta,
                                                     double limit = 0.3) {
  for (std::size_t j = 0; j < counts.size(); ++j)
    if (prob_exceeds(counts[j], limit) > zeta) return j;
  return std::nullopt;
}

inline std::vector<std::size_t> hard_safety(std::span<const BinomialCount> counts, double zeta, double limit = 0.3) {
  std::vector<std::size_t> out;
  if (auto cut = hard_safety_cutoff(counts, zeta, limit))
    for (std::size_t j = *cut; j < counts.size(); ++j) out.push_back(j);
  return out;
}

// ---- dose selection ----------------------------------------------------------

inline std::vector<std::size_t> admissible_set(const PosteriorSummary& s, const TrialConfig& cfg) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < s.size(); ++j)
    if (s.doses[j].p_safe > cfg.q_T && s.doses[j].p_effic > cfg.q_E) out.push_back(j);
  return out;
}

inline bool kfold_constraint(double candidate, double highest_tried, double k = 2.0) {
  return candidate <= k * highest_tried + kProbTolerance;
}

/// Argmax of `criterion` over admissible doses below the hard-safety cutoff
/// that respect the k-fold cap; ties go to the lower dose. When every such
/// dose lies above the cap, the highest permitted dose under the cap is
/// returned instead. Empty optional means no candidate (stop).
inline std::optional<std::size_t> select_next_dose(std::span<const std::size_t> admissible,
                                                   std::span<const double> criterion,
                                                   std::optional<std::size_t> excluded_from,
                                                   std::optional<std::size_t> highest_tried, const TrialConfig& cfg) {
  const auto permitted = [&](std::size_t j) { return !excluded_from || j < *excluded_from; };
  const auto under_cap = [&](std::size_t j) {
    return !highest_tried || kfold_constraint(cfg.grid[j], cfg.grid[*highest_tried], cfg.k_fold);
  };
  std::optional<std::size_t> best;
  bool any_candidate = false;
  for (std::size_t j : admissible) {
    if (!permitted(j)) continue;
    any_candidate = true;
    if (!under_cap(j)) continue;
    if (!best || criterion[j] > criterion[*best]) best = j;
  }
  if (best || !any_candidate) return best;
  for (std::size_t j = cfg.grid.size(); j-- > 0;)
    if (permitted(j) && under_cap(j)) return j;
  return std::nullopt;
}

inline std::vector<double> criterion_of(const PosteriorSummary& s) {
  std::vector<double> c(s.size());
  for (std::size_t j = 0; j < s.size(); ++j) c[j] = s.doses[j].criterion;
  return c;
}

/// Inputs to the rule layer at one model-based analysis.
struct RuleInputs {
  const TrialState& state;
  const PosteriorSummary& summary;
  std::span<const std::size_t> admissible;   // already filtered by the hard-safety cutoff
  std::optional<std::size_t> candidate;      // select_next_dose result
  bool precision_applicable = true;
};

inline RuleVerdict stopping_check(const RuleInputs& in, const TrialConfig& cfg) {
  const std::size_t J = cfg.grid.size();
  RuleVerdict v;
  if (in.state.excluded_from)
    for (std::size_t j = *in.state.excluded_from; j < J; ++j) v.excluded_doses.push_back(j);
  auto stop = [&](StopReason r) {
    v.stop = true;
    v.reason = r;
    return v;
  };
  const bool realistic = cfg.rule_setting == RuleSetting::Realistic;
  const auto cohorts = cohorts_of(in.state.records);
  const auto counts = cycle1_counts(in.state.records, J);

  if (in.state.excluded_from && *in.state.excluded_from == 0) return stop(StopReason::HardSafety);
  if (in.admissible.empty() || !in.candidate) return stop(StopReason::NoAdmissible);
  if (realistic) {
    if (cohorts_at(cohorts, 0) >= 1 && prob_exceeds(counts[0], cfg.cycle1_tox_limit) > cfg.lowest_unsafe_prob)
      return stop(StopReason::LowestUnsafe);
    if (cohorts_at(cohorts, J - 1) >= 1 &&
        1.0 - prob_exceeds(counts[J - 1], cfg.cycle1_tox_limit) > cfg.highest_safe_prob)
      return stop(StopReason::HighestVerySafe);
    if (cohorts_at(cohorts, *in.candidate) >= cfg.c_suff) return stop(StopReason::SufficientInfo);
    if (in.precision_applicable && in.summary.cv_mtd && in.summary.cv_dose_eff) {
      const auto matured = static_cast<std::size_t>(std::count_if(
          cohorts.begin(), cohorts.end(), [&](const Cohort& c) { return in.state.now - c.entry_time >= 1.0; }));
      if (matured >= cfg.c_suff && *in.summary.cv_mtd < cfg.precision_cv &&
          *in.summary.cv_dose_eff < cfg.precision_cv)
        return stop(StopReason::Precision);
    }
  }
  if (in.state.n_patients() >= cfg.n_max) return stop(StopReason::MaxPatients);
  return v;
}

/// Final recommendation once the trial has stopped.
inline std::optional<std::size_t> final_selection(StopReason reason, const PosteriorSummary& final_summary,
                                                  std::optional<std::size_t> excluded_from, const TrialConfig& cfg) {
  if (stops_without_recommendation(reason)) return std::nullopt;
  std::optional<std::size_t> best;
  for (std::size_t j : admissible_set(final_summary, cfg)) {
    if (excluded_from && j >= *excluded_from) continue;
    if (!best || final_summary.doses[j].criterion > final_summary.doses[*best].criterion) best = j;
  }
  return best;
}

inline json verdict_json(double cycle, const RuleVerdict& v) {
  return json{{"cycle", cycle}, {"stop", v.stop}, {"reason", to_string(v.reason)}, {"excluded_doses", v.excluded_doses}};
}

}  // namespace obdlab::decisions
