#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "obdlab/conduct_service.hpp"
#include "obdlab/obdlab.hpp"

namespace {

using namespace obdlab;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string mcmc_profile() {
  const char* v = std::getenv("OBDLAB_MCMC");
  return v ? v : "fast";
}

// Writes to `path`, or stdout when it is "-".
template <class Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path == "-") {
    fn(std::cout);
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  fn(os);
  if (!os) throw std::runtime_error("write failed: " + path);
}

struct SimulateArgs {
  std::string design = "jtc";
  std::string scenario = "E1.T1";
  std::size_t reps = 200;
  std::uint64_t seed = 1;
  std::string rules = "realistic";
  int pattern = 1;
  unsigned jobs = 0;
  std::string out = "-";
  std::string json_out;
  std::string log_out;
  std::string patients_out;
};

int run_simulate(const SimulateArgs& a) {
  std::vector<Design> designs;
  std::vector<Scenario> scenarios;
  sim::SimOptions opt;
  try {
    if (a.design == "all") {
      designs.assign(std::begin(kAllDesigns), std::end(kAllDesigns));
    } else {
      designs.push_back(design_from_string(a.design));
    }
    const auto lib = scenario_library(pattern_from_int(a.pattern));
    if (a.scenario == "all") {
      scenarios = lib;
    } else {
      scenarios.push_back(find_scenario(lib, a.scenario));
    }
    opt.trial.rule_setting = rule_setting_from_string(a.rules);
    opt.mcmc = mcmc::McmcConfig::from_env();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  opt.keep_patients = !a.patients_out.empty();

  std::ostringstream flags;
  flags << "design=" << a.design << " scenario=" << a.scenario << " reps=" << a.reps << " seed=" << a.seed
        << " rules=" << a.rules << " pattern=" << a.pattern << " mcmc=" << mcmc_profile();

  std::vector<sim::OCReport> rows;
  std::vector<std::pair<std::string, sim::BatchResult>> batches;
  for (const auto& s : scenarios)
    for (Design d : designs) {
      auto b = sim::run_batch(d, s, opt, a.reps, a.seed, a.jobs);
      rows.push_back(b.report);
      batches.emplace_back(s.name, std::move(b));
    }

  with_output(a.out, [&](std::ostream& os) { report::write_oc_csv(os, rows, flags.str()); });
  if (!a.json_out.empty())
    with_output(a.json_out, [&](std::ostream& os) {
      os << json{{"format", "obdlab-v1"}, {"flags", flags.str()}, {"reports", rows}}.dump(2) << '\n';
    });
  if (!a.log_out.empty())
    with_output(a.log_out, [&](std::ostream& os) {
      for (const auto& [name, b] : batches)
        for (std::size_t i = 0; i < b.trials.size(); ++i) {
          json line = sim::trial_log_json(b.trials[i], i);
          line["design"] = b.report.design;
          line["scenario"] = name;
          os << line.dump() << '\n';
        }
    });
  if (!a.patients_out.empty())
    with_output(a.patients_out, [&](std::ostream& os) {
      os << sim::kCsvVersion << '\n' << "#flags " << flags.str() << '\n' << "design,scenario,";
      datagen::write_patient_csv_header(os);
      for (const auto& [name, b] : batches)
        for (std::size_t i = 0; i < b.trials.size(); ++i)
          for (std::size_t k = 0; k < b.trials[i].patients.size(); ++k) {
            const auto& p = b.trials[i].patients[k];
            os << b.report.design << ',' << name << ',';
            datagen::write_patient_csv_row(os, i, k, opt.trial.grid[p.dose_index], p.entry, p.times, p.record);
          }
    });
  return 0;
}

int run_tables(const std::string& which, const std::string& out) {
  const TrialConfig cfg;
  const auto lib = scenario_library();
  with_output(out, [&](std::ostream& os) {
    os << sim::kCsvVersion << '\n' << "#table " << which << '\n';
    os << std::setprecision(6);
    double max_delta = 0.0;
    if (which == "scenarios") {
      os << "scenario,dose_index,dose,tox_cycle1,tox_full,tox_full_reconstructed,eff_cycle1,eff_full\n";
      for (const auto& s : lib)
        for (std::size_t j = 0; j < s.size(); ++j) {
          const double rec = full_tox_from_cycle1(s.tox_cycle1[j], static_cast<int>(cfg.tau), table1::kCycleDecay);
          max_delta = std::max(max_delta, std::abs(rec - s.tox_full[j]));
          os << s.name << ',' << j << ',' << cfg.grid[j] << ',' << s.tox_cycle1[j] << ',' << s.tox_full[j] << ','
             << rec << ',' << s.eff_cycle1(j) << ',' << s.eff_full[j] << '\n';
        }
    } else {
      const bool util = which == "utility";
      const auto table = util ? sim::true_utility_table(cfg) : sim::true_atae_table(cfg);
      const auto& ref = util ? reference::kUtility : reference::kAtae;
      os << "scenario,dose_index,dose,value,reference,delta\n";
      for (std::size_t i = 0; i < lib.size(); ++i)
        for (std::size_t j = 0; j < table[i].size(); ++j) {
          const double d = table[i][j] - ref[i][j];
          max_delta = std::max(max_delta, std::abs(d));
          os << lib[i].name << ',' << j << ',' << cfg.grid[j] << ',' << table[i][j] << ',' << ref[i][j] << ',' << d
             << '\n';
        }
    }
    os << "#max_abs_delta " << max_delta << '\n';
  });
  return 0;
}

int run_oc_report(const std::vector<std::string>& inputs, const std::string& out, const std::string& means_out,
                  const std::string& plots) {
  std::vector<sim::OCReport> rows;
  for (const auto& path : inputs) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path);
    try {
      auto r = report::read_oc_csv(is);
      rows.insert(rows.end(), r.begin(), r.end());
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ": " + e.what());
    }
  }
  with_output(out, [&](std::ostream& os) { report::write_oc_csv(os, rows); });
  const auto means = report::design_means(rows);
  if (!means_out.empty()) with_output(means_out, [&](std::ostream& os) { report::write_oc_csv(os, means); });
  if (!plots.empty()) {
    std::filesystem::create_directories(plots);
    for (const auto& [stem, svg] : report::oc_charts(rows))
      with_output((std::filesystem::path(plots) / ("oc_" + stem + ".svg")).string(),
                  [&](std::ostream& os) { os << svg; });
  }
  return 0;
}

int run_serve(const std::string& host, int port, const std::string& journal) {
  std::optional<std::filesystem::path> dir;
  if (!journal.empty()) dir = journal;
  service::SessionStore store(mcmc::McmcConfig::from_env(), dir);
  httplib::Server server;
  service::register_routes(server, store);
  std::cerr << "obdlab conduct service on " << host << ':' << port << '\n';
  if (!server.listen(host, port)) throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"obdlab: phase I/II dose-finding simulation laboratory"};
  app.require_subcommand(1);

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Run replicated trials and write an OC report");
  simulate->add_option("--design", sa.design, "jtc|jcrm|atae|assisted|all");
  simulate->add_option("--scenario", sa.scenario, "Scenario name (e.g. E1.T1) or all");
  simulate->add_option("--reps", sa.reps, "Replications per design and scenario")->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sa.seed, "Master seed");
  simulate->add_option("--rules", sa.rules, "realistic|theoretical");
  simulate->add_option("--pattern", sa.pattern, "Efficacy time-trend pattern")->check(CLI::Range(1, 3));
  simulate->add_option("--jobs", sa.jobs, "Concurrent replications (0 = all cores)");
  simulate->add_option("--out", sa.out, "OC CSV path ('-' for stdout)");
  simulate->add_option("--json", sa.json_out, "Also write the OC report as JSON");
  simulate->add_option("--log", sa.log_out, "Per-replication decision log (JSON lines)");
  simulate->add_option("--patients", sa.patients_out, "Patient-level data CSV");

  std::string which = "utility", tables_out = "-";
  auto* tables = app.add_subcommand("tables", "Scenario and truth tables with reference deltas");
  tables->add_option("--which", which, "scenarios|utility|atae")
      ->check(CLI::IsMember({"scenarios", "utility", "atae"}));
  tables->add_option("--out", tables_out, "CSV path ('-' for stdout)");

  std::vector<std::string> inputs;
  std::string oc_out = "-", means_out, plots;
  auto* oc = app.add_subcommand("oc-report", "Merge OC CSV files and compute per-design means");
  oc->add_option("--in", inputs, "OC CSV files written by simulate")->required();
  oc->add_option("--out", oc_out, "Merged CSV path ('-' for stdout)");
  oc->add_option("--means", means_out, "Per-design mean CSV path");
  oc->add_option("--plots", plots, "Directory for SVG bar charts");

  std::string host = "127.0.0.1", journal;
  int port = 8080;
  auto* serve = app.add_subcommand("conduct-serve", "Serve the live trial-conduct HTTP API");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "TCP port")->check(CLI::Range(1, 65535));
  serve->add_option("--journal", journal, "Directory for session journals");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*simulate) return run_simulate(sa);
    if (*tables) return run_tables(which, tables_out);
    if (*oc) return run_oc_report(inputs, oc_out, means_out, plots);
    if (*serve) return run_serve(host, port, journal);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
