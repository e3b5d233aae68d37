#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "obdlab/utility.hpp"

namespace obdlab {

using json = nlohmann::json;

// Comparisons against thresholds use the tabulated 3-decimal probabilities;
// this slack keeps e.g. 0.391 <= 0.391 stable under floating point.
inline constexpr double kProbTolerance = 1e-9;

struct DoseGrid {
  std::vector<double> values;  // MBq
  std::vector<std::string> labels;

  DoseGrid() = default;
  DoseGrid(std::vector<double> v, std::vector<std::string> l) : values(std::move(v)), labels(std::move(l)) {
    validate();
  }

  [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t j) const { return values.at(j); }

  void validate() const {
    if (values.empty()) throw std::invalid_argument("dose grid is empty");
    if (!labels.empty() && labels.size() != values.size())
      throw std::invalid_argument("dose grid labels do not match values");
    for (std::size_t j = 0; j < values.size(); ++j) {
      if (!(values[j] > 0.0)) throw std::invalid_argument("dose values must be positive");
      if (j > 0 && !(values[j] > values[j - 1]))
        throw std::invalid_argument("dose values must be strictly increasing");
    }
  }

  static DoseGrid standard() {
    return DoseGrid({1.5, 2.5, 3.5, 4.5, 6.0, 7.0},
                    {"1.5MBq", "2.5MBq", "3.5MBq", "4.5MBq", "6.0MBq", "7.0MBq"});
  }
};

/// Cycle-1 efficacy as a fraction of full follow-up efficacy.
enum class EffPattern { OneThird = 1, OneSixth = 2, OneHalf = 3 };

inline double pattern_fraction(EffPattern p) noexcept {
  switch (p) {
    case EffPattern::OneSixth: return 1.0 / 6.0;
    case EffPattern::OneHalf: return 0.5;
    case EffPattern::OneThird: break;
  }
  return 1.0 / 3.0;
}

inline EffPattern pattern_from_int(int k) {
  if (k < 1 || k > 3) throw std::invalid_argument("efficacy pattern must be 1, 2 or 3");
  return static_cast<EffPattern>(k);
}

struct Scenario {
  std::string name;
  std::vector<double> tox_cycle1;
  std::vector<double> tox_full;
  std::vector<double> eff_full;
  EffPattern eff_pattern = EffPattern::OneThird;

  [[nodiscard]] std::size_t size() const noexcept { return tox_full.size(); }

  [[nodiscard]] double eff_cycle1(std::size_t j) const {
    return eff_full.at(j) * pattern_fraction(eff_pattern);
  }

  void validate(std::size_t n_doses) const {
    if (tox_cycle1.size() != n_doses || tox_full.size() != n_doses || eff_full.size() != n_doses)
      throw std::invalid_argument("scenario " + name + ": per-dose lists must match the dose grid");
    auto in_open_unit = [](double p) { return p > 0.0 && p < 1.0; };
    for (std::size_t j = 0; j < n_doses; ++j) {
      if (!in_open_unit(tox_cycle1[j]) || !in_open_unit(tox_full[j]) || !in_open_unit(eff_full[j]))
        throw std::invalid_argument("scenario " + name + ": probabilities must lie in (0,1)");
      if (tox_full[j] < tox_cycle1[j])
        throw std::invalid_argument("scenario " + name + ": full toxicity below cycle-1 toxicity");
    }
  }
};

/// One patient's observed state at an analysis. Event times are measured
/// in cycles since the patient's own entry; entry_time is trial calendar time.
struct PatientRecord {
  std::size_t dose_index = 0;
  double entry_time = 0.0;
  std::optional<double> tox_time;
  std::optional<double> eff_time;
  double followup = 0.0;
  bool left_trial = false;

  [[nodiscard]] bool has_tox() const noexcept { return tox_time.has_value(); }
  [[nodiscard]] bool has_eff() const noexcept { return eff_time.has_value(); }
};

/// Throws std::invalid_argument if the record violates the observation rules.
inline void validate_record(const PatientRecord& r, double tau, std::size_t n_doses) {
  if (r.dose_index >= n_doses) throw std::invalid_argument("dose_index outside the dose grid");
  if (!(r.entry_time >= 0.0)) throw std::invalid_argument("entry_time must be >= 0");
  if (!(r.followup >= 0.0) || r.followup > tau + kProbTolerance)
    throw std::invalid_argument("followup must lie in [0, tau]");
  if (r.tox_time && (!(*r.tox_time > 0.0) || *r.tox_time > r.followup + kProbTolerance))
    throw std::invalid_argument("tox_time must lie in (0, followup]");
  if (r.eff_time && (!(*r.eff_time > 0.0) || *r.eff_time > r.followup + kProbTolerance))
    throw std::invalid_argument("eff_time must lie in (0, followup]");
  if (r.tox_time && r.eff_time && *r.eff_time > *r.tox_time)
    throw std::invalid_argument("efficacy cannot be observed after a DLT");
}

enum class RuleSetting { Realistic, Theoretical };

inline const char* to_string(RuleSetting s) noexcept {
  return s == RuleSetting::Realistic ? "realistic" : "theoretical";
}

inline RuleSetting rule_setting_from_string(const std::string& s) {
  if (s == "realistic") return RuleSetting::Realistic;
  if (s == "theoretical") return RuleSetting::Theoretical;
  throw std::invalid_argument("unknown rule setting: " + s);
}

struct TrialConfig {
  DoseGrid grid = DoseGrid::standard();
  double tau = 3.0;           // cycles of follow-up
  double cycle_weeks = 6.0;
  std::size_t cohort_size = 3;
  std::size_t n_max = 60;
  std::size_t c_suff = 30;    // cohorts
  double pi_T_star = 0.391;
  double pi_E_star = 0.2;
  double q_T = 0.10;
  double q_E = 0.10;
  decisions::UtilityWeights weights{};
  RuleSetting rule_setting = RuleSetting::Realistic;

  // Enforcement / stopping constants.
  double zeta = 0.95;
  double cycle1_tox_limit = 0.3;
  double lowest_unsafe_prob = 0.80;
  double highest_safe_prob = 0.80;
  double precision_cv = 0.30;
  double k_fold = 2.0;

  // Model covariate = dose value * dose_scale; 2-fold rule always uses raw values.
  double dose_scale = 1.0;

  void validate() const {
    grid.validate();
    if (!(tau >= 1.0)) throw std::invalid_argument("tau must be >= 1");
    if (!(cycle_weeks > 0.0)) throw std::invalid_argument("cycle_weeks must be positive");
    if (cohort_size < 1) throw std::invalid_argument("cohort_size must be >= 1");
    if (n_max < cohort_size) throw std::invalid_argument("n_max must be >= cohort_size");
    auto unit = [](double x) { return x > 0.0 && x < 1.0; };
    if (!unit(pi_T_star) || !unit(pi_E_star) || !unit(q_T) || !unit(q_E) || !unit(zeta))
      throw std::invalid_argument("thresholds must lie in (0,1)");
    if (!(k_fold >= 1.0)) throw std::invalid_argument("k_fold must be >= 1");
    if (!(dose_scale > 0.0)) throw std::invalid_argument("dose_scale must be positive");
  }

  [[nodiscard]] double covariate(std::size_t j) const { return grid[j] * dose_scale; }
};

// ---- scenario arithmetic ---------------------------------------------------

/// Full follow-up toxicity when the per-cycle hazard starts at p1 and is
/// multiplied by `decay` each subsequent cycle (conditional on survival).
inline double full_tox_from_cycle1(double p1, int tau, double decay) {
  if (!(p1 > 0.0 && p1 < 1.0)) throw std::domain_error("p1 must lie in (0,1)");
  if (!(decay > 0.0 && decay <= 1.0)) throw std::domain_error("decay must lie in (0,1]");
  if (tau < 1) throw std::domain_error("tau must be >= 1");
  double survive = 1.0;
  double hazard = p1;
  for (int c = 1; c <= tau; ++c) {
    if (hazard >= 1.0) throw std::domain_error("per-cycle toxicity reached 1");
    survive *= 1.0 - hazard;
    hazard *= decay;
  }
  return 1.0 - survive;
}

inline double eff_cycle1_from_full(double p_full, EffPattern pattern) {
  return p_full * pattern_fraction(pattern);
}

namespace table1 {
inline constexpr std::array<std::array<double, 6>, 5> kToxCycle1{{
    {0.100, 0.200, 0.300, 0.400, 0.500, 0.600},
    {0.100, 0.130, 0.160, 0.200, 0.250, 0.400},
    {0.400, 0.450, 0.500, 0.550, 0.600, 0.650},
    {0.300, 0.400, 0.450, 0.500, 0.550, 0.600},
    {0.100, 0.120, 0.140, 0.160, 0.180, 0.200},
}};
inline constexpr std::array<std::array<double, 6>, 5> kToxFull{{
    {0.140, 0.270, 0.391, 0.503, 0.606, 0.701},
    {0.140, 0.180, 0.219, 0.270, 0.332, 0.503},
    {0.503, 0.556, 0.606, 0.655, 0.701, 0.746},
    {0.391, 0.503, 0.556, 0.606, 0.655, 0.701},
    {0.140, 0.166, 0.193, 0.219, 0.245, 0.270},
}};
inline constexpr std::array<std::array<double, 6>, 4> kEffFull{{
    {0.200, 0.300, 0.400, 0.500, 0.600, 0.700},
    {0.300, 0.400, 0.500, 0.500, 0.500, 0.500},
    {0.100, 0.120, 0.140, 0.160, 0.180, 0.200},
    {0.100, 0.150, 0.200, 0.300, 0.500, 0.700},
}};
inline constexpr double kCycleDecay = 1.0 / 3.0;
}  // namespace table1

inline std::string scenario_name(int eff, int tox) {
  return "E" + std::to_string(eff) + ".T" + std::to_string(tox);
}

/// The 20 efficacy x safety combinations, ordered E1.T1, E1.T2, ..., E4.T5.
inline std::vector<Scenario> scenario_library(EffPattern pattern = EffPattern::OneThird) {
  std::vector<Scenario> lib;
  lib.reserve(20);
  for (int e = 0; e < 4; ++e) {
    for (int t = 0; t < 5; ++t) {
      Scenario s;
      s.name = scenario_name(e + 1, t + 1);
      s.tox_cycle1.assign(table1::kToxCycle1[t].begin(), table1::kToxCycle1[t].end());
      s.tox_full.assign(table1::kToxFull[t].begin(), table1::kToxFull[t].end());
      s.eff_full.assign(table1::kEffFull[e].begin(), table1::kEffFull[e].end());
      s.eff_pattern = pattern;
      lib.push_back(std::move(s));
    }
  }
  return lib;
}

inline Scenario find_scenario(const std::vector<Scenario>& lib, const std::string& name) {
  for (const auto& s : lib)
    if (s.name == name) return s;
  throw std::invalid_argument("unknown scenario: " + name);
}

/// Safety scenario number (1..5) parsed from an "Ex.Ty" name; 0 if absent.
inline int safety_index(const std::string& name) {
  const auto pos = name.find(".T");
  if (pos == std::string::npos) return 0;
  try {
    return std::stoi(name.substr(pos + 2));
  } catch (const std::exception&) {
    return 0;
  }
}

struct DoseClassification {
  std::vector<bool> unsafe;
  std::vector<bool> acceptable;
  std::optional<std::size_t> obd;
};

inline DoseClassification classify_doses(const Scenario& s, const TrialConfig& cfg) {
  DoseClassification c;
  const std::size_t n = s.size();
  c.unsafe.resize(n);
  c.acceptable.resize(n);
  double best = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    c.unsafe[j] = s.tox_full[j] > cfg.pi_T_star + kProbTolerance;
    c.acceptable[j] = !c.unsafe[j] && s.eff_full[j] >= cfg.pi_E_star - kProbTolerance;
    if (!c.acceptable[j]) continue;
    const double u = decisions::utility(s.eff_full[j], s.tox_full[j], cfg.weights);
    if (!c.obd || u > best) {
      c.obd = j;
      best = u;
    }
  }
  return c;
}

// ---- JSON ------------------------------------------------------------------

inline void to_json(json& j, const Scenario& s) {
  j = json{{"name", s.name},
           {"tox_cycle1", s.tox_cycle1},
           {"tox_full", s.tox_full},
           {"eff_full", s.eff_full},
           {"pattern", static_cast<int>(s.eff_pattern)}};
}

inline void from_json(const json& j, Scenario& s) {
  j.at("name").get_to(s.name);
  j.at("tox_cycle1").get_to(s.tox_cycle1);
  j.at("tox_full").get_to(s.tox_full);
  j.at("eff_full").get_to(s.eff_full);
  s.eff_pattern = pattern_from_int(j.value("pattern", 1));
}

inline void to_json(json& j, const PatientRecord& r) {
  j = json{{"dose_index", r.dose_index},
           {"entry_time", r.entry_time},
           {"tox_time", r.tox_time ? json(*r.tox_time) : json(nullptr)},
           {"eff_time", r.eff_time ? json(*r.eff_time) : json(nullptr)},
           {"followup", r.followup},
           {"left_trial", r.left_trial}};
}

inline void from_json(const json& j, PatientRecord& r) {
  j.at("dose_index").get_to(r.dose_index);
  r.entry_time = j.value("entry_time", 0.0);
  r.tox_time.reset();
  r.eff_time.reset();
  if (j.contains("tox_time") && !j["tox_time"].is_null()) r.tox_time = j["tox_time"].get<double>();
  if (j.contains("eff_time") && !j["eff_time"].is_null()) r.eff_time = j["eff_time"].get<double>();
  j.at("followup").get_to(r.followup);
  r.left_trial = j.value("left_trial", r.tox_time.has_value());
}

inline void to_json(json& j, const TrialConfig& c) {
  j = json{{"doses", c.grid.values},
           {"dose_labels", c.grid.labels},
           {"tau", c.tau},
           {"cycle_weeks", c.cycle_weeks},
           {"cohort_size", c.cohort_size},
           {"n_max", c.n_max},
           {"c_suff", c.c_suff},
           {"pi_T_star", c.pi_T_star},
           {"pi_E_star", c.pi_E_star},
           {"q_T", c.q_T},
           {"q_E", c.q_E},
           {"omega1", c.weights.omega1},
           {"omega2", c.weights.omega2},
           {"phi_T", c.weights.phi_T},
           {"rule_setting", to_string(c.rule_setting)},
           {"zeta", c.zeta},
           {"k_fold", c.k_fold},
           {"dose_scale", c.dose_scale}};
}

/// Missing keys keep their defaults, so `{}` yields the default configuration.
inline void from_json(const json& j, TrialConfig& c) {
  if (j.contains("doses")) {
    auto values = j["doses"].get<std::vector<double>>();
    auto labels = j.value("dose_labels", std::vector<std::string>{});
    if (labels.empty())
      for (double v : values) labels.push_back(std::to_string(v));
    c.grid = DoseGrid(std::move(values), std::move(labels));
  }
  c.tau = j.value("tau", c.tau);
  c.cycle_weeks = j.value("cycle_weeks", c.cycle_weeks);
  c.cohort_size = j.value("cohort_size", c.cohort_size);
  c.n_max = j.value("n_max", c.n_max);
  c.c_suff = j.value("c_suff", c.c_suff);
  c.pi_T_star = j.value("pi_T_star", c.pi_T_star);
  c.pi_E_star = j.value("pi_E_star", c.pi_E_star);
  c.q_T = j.value("q_T", c.q_T);
  c.q_E = j.value("q_E", c.q_E);
  c.weights.omega1 = j.value("omega1", c.weights.omega1);
  c.weights.omega2 = j.value("omega2", c.weights.omega2);
  c.weights.phi_T = j.value("phi_T", c.weights.phi_T);
  if (j.contains("rule_setting")) c.rule_setting = rule_setting_from_string(j["rule_setting"].get<std::string>());
  c.zeta = j.value("zeta", c.zeta);
  c.k_fold = j.value("k_fold", c.k_fold);
  c.dose_scale = j.value("dose_scale", c.dose_scale);
}

inline json scenario_library_json(const std::vector<Scenario>& lib) { return json(lib); }

inline std::vector<Scenario> scenario_library_from_json(const json& j) {
  return j.get<std::vector<Scenario>>();
}

}  // namespace obdlab
