#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "obdlab/datagen.hpp"
#include "obdlab/decisions.hpp"
#include "obdlab/domain.hpp"
#include "obdlab/protocol.hpp"
#include "obdlab/reference_tables.hpp"
#include "obdlab/rng.hpp"
#include "obdlab/samplers.hpp"

namespace obdlab::sim {

struct SimOptions {
  TrialConfig trial;
  mcmc::McmcConfig mcmc = mcmc::McmcConfig::fast();
  DesignPriors priors;
  double rho = -0.5;        // log-time correlation of the generating truth
  bool keep_patients = false;
};

struct LogEntry {
  double time = 0.0;
  bool model_based = false;
  std::vector<std::size_t> admissible;
  std::optional<std::size_t> next_dose;
  std::optional<std::size_t> excluded_from;
  decisions::RuleVerdict verdict;
};

struct SimPatient {
  std::size_t dose_index = 0;
  double entry = 0.0;
  datagen::EventTimes times;
  PatientRecord record;  // state at the end of follow-up
};

struct TrialResult {
  std::optional<std::size_t> selected_dose;
  decisions::StopReason stop_reason = decisions::StopReason::Continue;
  std::size_t n_patients = 0;
  std::size_t n_cohorts = 0;
  double duration = 0.0;        // cycles
  double duration_weeks = 0.0;
  std::vector<std::size_t> assignments;
  std::size_t n_on_unsafe = 0;
  std::vector<LogEntry> log;
  std::vector<SimPatient> patients;  // filled when SimOptions::keep_patients

  bool operator==(const TrialResult& o) const {
    return selected_dose == o.selected_dose && stop_reason == o.stop_reason && n_patients == o.n_patients &&
           duration == o.duration && assignments == o.assignments && n_on_unsafe == o.n_on_unsafe;
  }
};

namespace detail {
inline constexpr std::uint64_t kPatientStream = 0x70617469656e74ULL;
inline constexpr std::uint64_t kMcmcStream = 0x6d636d63ULL;

inline void refresh(std::vector<SimPatient>& patients, std::vector<PatientRecord>& records, double now,
                    double tau) {
  for (std::size_t i = 0; i < patients.size(); ++i) {
    PatientRecord r = datagen::observe(patients[i].times, std::clamp(now - patients[i].entry, 0.0, tau), tau);
    r.dose_index = patients[i].dose_index;
    r.entry_time = patients[i].entry;
    records[i] = r;
  }
}
}  // namespace detail

/// Simulates one trial. Patient event times come from the stream keyed by
/// (seed, scenario, replication, patient), so every design sees the same
/// patients in the same replication.
inline TrialResult run_trial(Design design, const Scenario& scenario, const SimOptions& opt, std::uint64_t seed,
                             std::size_t replication = 0) {
  const TrialConfig& cfg = opt.trial;
  cfg.validate();
  const std::size_t J = cfg.grid.size();
  scenario.validate(J);
  const auto cls = classify_doses(scenario, cfg);
  const std::uint64_t scen_key = hash_name(scenario.name);

  std::vector<datagen::LognormalPair> truth(J);
  for (std::size_t j = 0; j < J; ++j) truth[j] = datagen::dose_truth(scenario, j, cfg.tau, opt.rho);

  TrialResult res;
  res.assignments.assign(J, 0);
  std::vector<SimPatient> patients;
  decisions::TrialState state;
  double last_entry = 0.0;

  auto enroll = [&](std::size_t dose, double t) {
    const std::size_t n = std::min(cfg.cohort_size, cfg.n_max - patients.size());
    for (std::size_t k = 0; k < n; ++k) {
      auto rng = StreamRng::keyed({seed, scen_key, replication, detail::kPatientStream, patients.size()});
      patients.push_back({dose, t, datagen::sample_event_times(truth[dose], rng), {}});
      state.records.emplace_back();
      ++res.assignments[dose];
      if (cls.unsafe[dose]) ++res.n_on_unsafe;
    }
    ++res.n_cohorts;
    last_entry = t;
  };

  // Joint CRM decisions wait for complete follow-up of the previous cohort.
  const double step = design == Design::JCRM ? cfg.tau : 1.0;
  std::size_t n_analyses = 0;
  auto mcmc_rng = [&] {
    return StreamRng::keyed({seed, scen_key, replication, detail::kMcmcStream,
                             static_cast<std::uint64_t>(design), n_analyses++});
  };

  enroll(0, 0.0);
  double t = 0.0;
  decisions::RuleVerdict verdict;
  for (;;) {
    t += step;
    detail::refresh(patients, state.records, t, cfg.tau);
    state.now = t;
    const Analysis a = decide(design, state, cfg, opt.mcmc, mcmc_rng(), opt.priors);
    res.log.push_back({t, a.model_based, a.admissible, a.next_dose, state.excluded_from, a.verdict});
    if (a.verdict.stop) {
      verdict = a.verdict;
      break;
    }
    enroll(*a.next_dose, t);
  }

  res.stop_reason = verdict.reason;
  res.duration = last_entry + cfg.tau;
  res.duration_weeks = res.duration * cfg.cycle_weeks;
  res.n_patients = patients.size();

  // Follow everyone to completion before the final analysis.
  detail::refresh(patients, state.records, res.duration, cfg.tau);
  state.now = res.duration;
  if (!decisions::stops_without_recommendation(verdict.reason)) {
    auto rng = mcmc_rng();
    const auto final_summary = fit_and_summarize(design, state.records, cfg, opt.mcmc, rng, opt.priors);
    res.selected_dose = decisions::final_selection(verdict.reason, final_summary, state.excluded_from, cfg);
  }
  if (opt.keep_patients) {
    for (std::size_t i = 0; i < patients.size(); ++i) patients[i].record = state.records[i];
    res.patients = std::move(patients);
  }
  return res;
}

// ---- operating characteristics ----------------------------------------------

struct Outcome {
  bool correct = false;
  bool acceptable = false;
};

/// Correct: the true OBD is recommended, or the trial ends without a
/// recommendation when there is none. In the realistic setting the correct
/// outcome for an all-safe (T5) scenario is the highest-dose-very-safe stop;
/// without that rule there is no correct outcome for T5.
inline Outcome score(const TrialResult& r, const Scenario& s, const TrialConfig& cfg) {
  const auto cls = classify_doses(s, cfg);
  Outcome o;
  if (safety_index(s.name) == 5) {
    o.correct = cfg.rule_setting == RuleSetting::Realistic && r.stop_reason == decisions::StopReason::HighestVerySafe;
  } else if (cls.obd) {
    o.correct = r.selected_dose == cls.obd;
  } else {
    o.correct = !r.selected_dose.has_value();
  }
  o.acceptable = o.correct || (r.selected_dose && cls.acceptable[*r.selected_dose]);
  return o;
}

struct OCReport {
  std::string design;
  std::string scenario;
  RuleSetting rule_setting = RuleSetting::Realistic;
  int pattern = 1;
  std::size_t n_reps = 0;
  double pct_correct = 0.0;
  double pct_acceptable = 0.0;
  double mean_n = 0.0;
  double mean_duration_weeks = 0.0;
  double mean_unsafe_patients = 0.0;
};

inline OCReport aggregate(Design design, const Scenario& s, const TrialConfig& cfg,
                          const std::vector<TrialResult>& results) {
  OCReport rep;
  rep.design = to_string(design);
  rep.scenario = s.name;
  rep.rule_setting = cfg.rule_setting;
  rep.pattern = static_cast<int>(s.eff_pattern);
  rep.n_reps = results.size();
  for (const auto& r : results) {
    const Outcome o = score(r, s, cfg);
    rep.pct_correct += o.correct ? 1.0 : 0.0;
    rep.pct_acceptable += o.acceptable ? 1.0 : 0.0;
    rep.mean_n += static_cast<double>(r.n_patients);
    rep.mean_duration_weeks += r.duration_weeks;
    rep.mean_unsafe_patients += static_cast<double>(r.n_on_unsafe);
  }
  const double n = static_cast<double>(std::max<std::size_t>(results.size(), 1));
  rep.pct_correct *= 100.0 / n;
  rep.pct_acceptable *= 100.0 / n;
  rep.mean_n /= n;
  rep.mean_duration_weeks /= n;
  rep.mean_unsafe_patients /= n;
  return rep;
}

struct BatchResult {
  OCReport report;
  std::vector<TrialResult> trials;
};

/// Replications 0..n_reps-1 on a pool of `jobs` threads. Results are stored
/// by replication index, so the report does not depend on scheduling.
inline BatchResult run_batch(Design design, const Scenario& s, const SimOptions& opt, std::size_t n_reps,
                             std::uint64_t seed, unsigned jobs = 0) {
  if (n_reps == 0) throw std::invalid_argument("run_batch: n_reps must be >= 1");
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, n_reps));
  BatchResult out;
  out.trials.resize(n_reps);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n_reps && !failed;) {
      try {
        out.trials[i] = run_trial(design, s, opt, seed, i);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < jobs; ++k) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  out.report = aggregate(design, s, opt.trial, out.trials);
  return out;
}

/// run_batch over the three efficacy time-trend patterns.
inline std::vector<OCReport> efficacy_trend_sweep(std::span<const Design> designs,
                                                  std::span<const Scenario> scenarios,
                                                  std::span<const EffPattern> patterns, const SimOptions& opt,
                                                  std::size_t n_reps, std::uint64_t seed, unsigned jobs = 0) {
  std::vector<OCReport> out;
  for (EffPattern p : patterns)
    for (const Scenario& base : scenarios) {
      Scenario s = base;
      s.eff_pattern = p;
      for (Design d : designs) out.push_back(run_batch(d, s, opt, n_reps, seed, jobs).report);
    }
  return out;
}

// ---- truth tables ------------------------------------------------------------

inline std::vector<std::vector<double>> true_utility_table(const TrialConfig& cfg = {}) {
  std::vector<std::vector<double>> out;
  for (const auto& s : scenario_library()) {
    std::vector<double> row(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) row[j] = decisions::utility(s.eff_full[j], s.tox_full[j], cfg.weights);
    out.push_back(std::move(row));
  }
  return out;
}

/// Restricted mean of a lognormal survival curve over [0, tau] by adaptive
/// Gauss-Kronrod quadrature.
inline double lognormal_rmst(const datagen::LognormalParams& p, double tau) {
  auto surv = [&](double t) { return 1.0 - datagen::lognormal_cdf(t, p); };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(surv, 0.0, tau, 20, 1e-13);
}

/// AT/AE under the lognormal generating truth (no cure fraction).
inline std::vector<std::vector<double>> true_atae_table(const TrialConfig& cfg = {}) {
  std::vector<std::vector<double>> out;
  for (const auto& s : scenario_library()) {
    std::vector<double> row(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) {
      const auto lp = datagen::dose_truth(s, j, cfg.tau);
      row[j] = lognormal_rmst(lp.tox, cfg.tau) / lognormal_rmst(lp.eff, cfg.tau);
    }
    out.push_back(std::move(row));
  }
  return out;
}

// ---- serialization -------------------------------------------------------------

inline constexpr const char* kCsvVersion = "#obdlab-v1";

inline void write_oc_csv_header(std::ostream& os) {
  os << "design,scenario,rule_setting,pattern,n_reps,pct_correct,pct_acceptable,mean_n,mean_duration_weeks,"
        "mean_unsafe_patients\n";
}

inline void write_oc_csv_row(std::ostream& os, const OCReport& r) {
  const auto old = os.precision(10);
  os << r.design << ',' << r.scenario << ',' << to_string(r.rule_setting) << ',' << r.pattern << ',' << r.n_reps
     << ',' << r.pct_correct << ',' << r.pct_acceptable << ',' << r.mean_n << ',' << r.mean_duration_weeks << ','
     << r.mean_unsafe_patients << '\n';
  os.precision(old);
}

inline void to_json(json& j, const OCReport& r) {
  j = json{{"design", r.design},
           {"scenario", r.scenario},
           {"rule_setting", to_string(r.rule_setting)},
           {"pattern", r.pattern},
           {"n_reps", r.n_reps},
           {"pct_correct", r.pct_correct},
           {"pct_acceptable", r.pct_acceptable},
           {"mean_n", r.mean_n},
           {"mean_duration_weeks", r.mean_duration_weeks},
           {"mean_unsafe_patients", r.mean_unsafe_patients}};
}

inline json trial_log_json(const TrialResult& r, std::size_t rep) {
  json log = json::array();
  for (const auto& e : r.log) {
    json v = decisions::verdict_json(e.time, e.verdict);
    v["model_based"] = e.model_based;
    v["admissible"] = e.admissible;
    v["next_dose"] = e.next_dose ? json(*e.next_dose) : json(nullptr);
    log.push_back(std::move(v));
  }
  return json{{"rep", rep},
              {"selected_dose", r.selected_dose ? json(*r.selected_dose) : json(nullptr)},
              {"stop_reason", decisions::to_string(r.stop_reason)},
              {"n_patients", r.n_patients},
              {"duration_cycles", r.duration},
              {"assignments", r.assignments},
              {"n_on_unsafe", r.n_on_unsafe},
              {"decisions", std::move(log)}};
}

}  // namespace obdlab::sim
