#pragma once

#include <algorithm>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "obdlab/sim_engine.hpp"

// Versioned CSV tables and minimal SVG charts for operating characteristics.
namespace obdlab::report {

inline void write_oc_csv(std::ostream& os, const std::vector<sim::OCReport>& rows, const std::string& flags = {}) {
  os << sim::kCsvVersion << '\n';
  if (!flags.empty()) os << "#flags " << flags << '\n';
  sim::write_oc_csv_header(os);
  for (const auto& r : rows) sim::write_oc_csv_row(os, r);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

/// Parses a file written by write_oc_csv. Throws std::runtime_error on a
/// missing version line or malformed rows.
inline std::vector<sim::OCReport> read_oc_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != sim::kCsvVersion)
    throw std::runtime_error("not an obdlab OC table (missing " + std::string(sim::kCsvVersion) + " line)");
  std::vector<sim::OCReport> rows;
  bool header = false;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    const auto c = split_csv_line(line);
    if (c.size() != 10) throw std::runtime_error("malformed OC row at line " + std::to_string(lineno));
    try {
      sim::OCReport r;
      r.design = c[0];
      r.scenario = c[1];
      r.rule_setting = rule_setting_from_string(c[2]);
      r.pattern = std::stoi(c[3]);
      r.n_reps = std::stoul(c[4]);
      r.pct_correct = std::stod(c[5]);
      r.pct_acceptable = std::stod(c[6]);
      r.mean_n = std::stod(c[7]);
      r.mean_duration_weeks = std::stod(c[8]);
      r.mean_unsafe_patients = std::stod(c[9]);
      rows.push_back(r);
    } catch (const std::exception&) {
      throw std::runtime_error("malformed OC row at line " + std::to_string(lineno));
    }
  }
  if (!header) throw std::runtime_error("OC table has no header row");
  return rows;
}

/// Unweighted mean over scenarios, one row per (design, rule setting, pattern).
inline std::vector<sim::OCReport> design_means(const std::vector<sim::OCReport>& rows) {
  std::map<std::tuple<std::string, int, int>, std::pair<sim::OCReport, std::size_t>> acc;
  std::vector<std::tuple<std::string, int, int>> order;
  for (const auto& r : rows) {
    auto key = std::make_tuple(r.design, static_cast<int>(r.rule_setting), r.pattern);
    auto [it, fresh] = acc.try_emplace(key);
    if (fresh) {
      order.push_back(key);
      it->second.first.design = r.design;
      it->second.first.scenario = "mean";
      it->second.first.rule_setting = r.rule_setting;
      it->second.first.pattern = r.pattern;
    }
    auto& m = it->second.first;
    m.n_reps += r.n_reps;
    m.pct_correct += r.pct_correct;
    m.pct_acceptable += r.pct_acceptable;
    m.mean_n += r.mean_n;
    m.mean_duration_weeks += r.mean_duration_weeks;
    m.mean_unsafe_patients += r.mean_unsafe_patients;
    ++it->second.second;
  }
  std::vector<sim::OCReport> out;
  for (const auto& key : order) {
    auto [m, k] = acc[key];
    const double n = static_cast<double>(k);
    m.pct_correct /= n;
    m.pct_acceptable /= n;
    m.mean_n /= n;
    m.mean_duration_weeks /= n;
    m.mean_unsafe_patients /= n;
    out.push_back(m);
  }
  return out;
}

inline std::string xml_escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '&': o += "&amp;"; break;
      case '"': o += "&quot;"; break;
      case '\'': o += "&apos;"; break;
      default: o += c;
    }
  }
  return o;
}

/// Grouped bar chart: one group per category, one bar per series.
inline std::string bar_chart_svg(const std::string& title, const std::vector<std::string>& categories,
                                 const std::vector<std::string>& series,
                                 const std::vector<std::vector<double>>& values /* [series][category] */) {
  static const char* palette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"};
  const double bar = 10.0, gap = 14.0, left = 50.0, top = 30.0, height = 200.0;
  const double group = bar * static_cast<double>(series.size()) + gap;
  const double width = left + group * static_cast<double>(categories.size()) + 20.0;
  double vmax = 0.0;
  for (const auto& s : values)
    for (double v : s) vmax = std::max(vmax, v);
  if (vmax <= 0.0) vmax = 1.0;

  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << top + height + 90.0
     << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  os << "<text x=\"" << left << "\" y=\"18\" font-size=\"13\">" << xml_escape(title) << "</text>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top + height << "\" x2=\"" << width - 10.0 << "\" y2=\"" << top + height
     << "\" stroke=\"black\"/>\n";
  os << "<text x=\"4\" y=\"" << top + 4.0 << "\">" << vmax << "</text>\n";
  for (std::size_t c = 0; c < categories.size(); ++c) {
    const double x0 = left + group * static_cast<double>(c);
    for (std::size_t s = 0; s < series.size(); ++s) {
      const double v = std::max(0.0, values[s][c]);
      const double h = height * v / vmax;
      os << "<rect x=\"" << x0 + bar * static_cast<double>(s) << "\" y=\"" << top + height - h << "\" width=\"" << bar
         << "\" height=\"" << h << "\" fill=\"" << palette[s % 6] << "\"><title>" << xml_escape(series[s]) << ' '
         << xml_escape(categories[c]) << ": " << values[s][c] << "</title></rect>\n";
    }
    os << "<text transform=\"translate(" << x0 + 4.0 << ',' << top + height + 10.0
       << ") rotate(60)\">" << xml_escape(categories[c]) << "</text>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s)
    os << "<rect x=\"" << left + 80.0 * static_cast<double>(s) << "\" y=\"" << top + height + 70.0
       << "\" width=\"10\" height=\"10\" fill=\"" << palette[s % 6] << "\"/><text x=\""
       << left + 80.0 * static_cast<double>(s) + 14.0 << "\" y=\"" << top + height + 79.0 << "\">"
       << xml_escape(series[s]) << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

/// One chart per OC metric; returns (file stem, svg) pairs.
inline std::vector<std::pair<std::string, std::string>> oc_charts(const std::vector<sim::OCReport>& rows) {
  std::vector<std::string> scenarios, designs;
  for (const auto& r : rows) {
    if (std::find(scenarios.begin(), scenarios.end(), r.scenario) == scenarios.end()) scenarios.push_back(r.scenario);
    if (std::find(designs.begin(), designs.end(), r.design) == designs.end()) designs.push_back(r.design);
  }
  struct Metric {
    const char* stem;
    const char* title;
    double sim::OCReport::*field;
  };
  const Metric metrics[] = {
      {"pct_correct", "Correct selections (%)", &sim::OCReport::pct_correct},
      {"pct_acceptable", "Acceptable selections (%)", &sim::OCReport::pct_acceptable},
      {"mean_n", "Mean sample size", &sim::OCReport::mean_n},
      {"mean_duration_weeks", "Mean trial duration (weeks)", &sim::OCReport::mean_duration_weeks},
      {"mean_unsafe_patients", "Patients on unsafe doses", &sim::OCReport::mean_unsafe_patients},
  };
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& m : metrics) {
    std::vector<std::vector<double>> v(designs.size(), std::vector<double>(scenarios.size(), 0.0));
    for (const auto& r : rows) {
      const auto d = std::find(designs.begin(), designs.end(), r.design) - designs.begin();
      const auto s = std::find(scenarios.begin(), scenarios.end(), r.scenario) - scenarios.begin();
      v[d][s] = r.*m.field;
    }
    out.emplace_back(m.stem, bar_chart_svg(m.title, scenarios, designs, v));
  }
  return out;
}

}  // namespace obdlab::report
