#pragma once

#include <cmath>
#include <cstdlib>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "obdlab/numeric.hpp"
#include "obdlab/rng.hpp"

namespace obdlab::mcmc {

struct McmcConfig {
  std::size_t n_adapt = 1000;
  std::size_t n_burn = 1000;
  std::size_t n_keep = 2000;
  double target_accept = 0.35;
  std::vector<double> init;         // empty: model supplies its own
  std::vector<double> step_scales;  // empty: all 1
  bool trace_scales = false;        // record scales at every kept sweep

  void validate() const {
    if (!(target_accept > 0.1 && target_accept < 0.9))
      throw std::invalid_argument("target_accept must lie in (0.1, 0.9)");
    if (n_keep == 0) throw std::invalid_argument("n_keep must be positive");
    for (double s : step_scales)
      if (!(s > 0.0)) throw std::invalid_argument("step scales must be positive");
  }

  static McmcConfig full() { return {}; }

  static McmcConfig fast() {
    McmcConfig c;
    c.n_adapt = 400;
    c.n_burn = 300;
    c.n_keep = 1000;
    return c;
  }

  /// Profile selected by OBDLAB_MCMC={fast|full}; `fallback` when unset.
  static McmcConfig from_env(const McmcConfig& fallback = fast()) {
    const char* v = std::getenv("OBDLAB_MCMC");
    if (v == nullptr) return fallback;
    const std::string s(v);
    if (s == "fast") return fast();
    if (s == "full") return full();
    throw std::invalid_argument("OBDLAB_MCMC must be 'fast' or 'full'");
  }
};

struct PosteriorDraws {
  std::vector<std::string> names;
  std::size_t n_params = 0;
  std::vector<double> values;       // n_keep x n_params, row-major
  std::vector<double> acceptance;   // per parameter, over kept sweeps
  std::vector<double> step_scales;  // frozen scales used after adaptation
  std::vector<double> scale_trace;  // n_keep x n_params when traced

  [[nodiscard]] std::size_t size() const noexcept { return n_params == 0 ? 0 : values.size() / n_params; }
  [[nodiscard]] bool empty() const noexcept { return size() == 0; }

  [[nodiscard]] std::span<const double> row(std::size_t i) const {
    return {values.data() + i * n_params, n_params};
  }

  [[nodiscard]] std::vector<double> column(std::size_t k) const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = values[i * n_params + k];
    return out;
  }
};

/// Adaptive random-walk Metropolis-within-Gibbs.
///
/// `log_target` maps a parameter vector (on an unconstrained scale) to its
/// log density up to a constant. Each sweep updates one coordinate at a time
/// with a Gaussian proposal. During the first `n_adapt` sweeps each log step
/// scale follows a Robbins-Monro recursion toward `target_accept`; the scales
/// are frozen for burn-in and the kept sweeps.
template <class LogTarget>
PosteriorDraws run_mwg(LogTarget&& log_target, const McmcConfig& cfg, StreamRng& rng,
                       std::vector<std::string> names = {}) {
  cfg.validate();
  std::vector<double> x = cfg.init;
  const std::size_t p = x.size();
  if (p == 0) throw std::invalid_argument("run_mwg: empty initial vector");
  if (!cfg.step_scales.empty() && cfg.step_scales.size() != p)
    throw std::invalid_argument("run_mwg: step_scales size mismatch");
  if (names.empty())
    for (std::size_t k = 0; k < p; ++k) names.push_back("p" + std::to_string(k));

  double current = log_target(std::span<const double>(x));
  if (!std::isfinite(current)) throw std::domain_error("run_mwg: log target is not finite at init");

  std::vector<double> log_scale(p, 0.0);
  for (std::size_t k = 0; k < cfg.step_scales.size(); ++k) log_scale[k] = std::log(cfg.step_scales[k]);

  std::normal_distribution<double> gauss;
  std::vector<std::size_t> accepted(p, 0);

  auto sweep = [&](bool adapt, std::size_t iter) {
    for (std::size_t k = 0; k < p; ++k) {
      const double old = x[k];
      x[k] = old + std::exp(log_scale[k]) * gauss(rng);
      const double proposed = log_target(std::span<const double>(x));
      const double log_u = std::log(rng.uniform());
      const bool accept = std::isfinite(proposed) && log_u < proposed - current;
      if (accept) {
        current = proposed;
        ++accepted[k];
      } else {
        x[k] = old;
      }
      if (adapt) {
        const double gain = std::pow(static_cast<double>(iter) + 1.0, -0.6);
        log_scale[k] += gain * ((accept ? 1.0 : 0.0) - cfg.target_accept);
      }
    }
  };

  for (std::size_t i = 0; i < cfg.n_adapt; ++i) sweep(true, i);
  if (cfg.n_adapt >= 50) {
    for (std::size_t k = 0; k < p; ++k)
      if (accepted[k] == 0)
        throw std::runtime_error("run_mwg: every proposal for " + names[k] + " was rejected during adaptation");
  }
  for (std::size_t i = 0; i < cfg.n_burn; ++i) sweep(false, i);

  PosteriorDraws out;
  out.names = std::move(names);
  out.n_params = p;
  out.values.reserve(cfg.n_keep * p);
  if (cfg.trace_scales) out.scale_trace.reserve(cfg.n_keep * p);
  std::fill(accepted.begin(), accepted.end(), 0);
  for (std::size_t i = 0; i < cfg.n_keep; ++i) {
    sweep(false, i);
    out.values.insert(out.values.end(), x.begin(), x.end());
    if (cfg.trace_scales)
      for (double ls : log_scale) out.scale_trace.push_back(std::exp(ls));
  }
  out.acceptance.resize(p);
  out.step_scales.resize(p);
  for (std::size_t k = 0; k < p; ++k) {
    out.acceptance[k] = static_cast<double>(accepted[k]) / static_cast<double>(cfg.n_keep);
    out.step_scales[k] = std::exp(log_scale[k]);
  }
  return out;
}

struct SummaryStat {
  double mean = 0.0;
  double lower = 0.0;   // 10% quantile
  double median = 0.0;
  double upper = 0.0;   // 90% quantile
  double p_above = 0.0; // fraction of draws strictly above the threshold
};

/// Applies `transform` (draw row -> vector of outputs) to every draw and
/// summarizes each output coordinate.
template <class Transform>
std::vector<SummaryStat> summarize(const PosteriorDraws& draws, Transform&& transform, double threshold = 0.0) {
  if (draws.empty()) throw std::invalid_argument("summarize: no draws");
  const std::size_t n = draws.size();
  std::vector<std::vector<double>> cols;
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double> y = transform(draws.row(i));
    if (cols.empty()) cols.assign(y.size(), std::vector<double>(n));
    for (std::size_t k = 0; k < y.size(); ++k) cols[k][i] = y[k];
  }
  std::vector<SummaryStat> out(cols.size());
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const auto& c = cols[k];
    out[k].mean = mean(c);
    out[k].lower = quantile(c, 0.1);
    out[k].median = quantile(c, 0.5);
    out[k].upper = quantile(c, 0.9);
    std::size_t above = 0;
    for (double v : c) above += v > threshold ? 1 : 0;
    out[k].p_above = static_cast<double>(above) / static_cast<double>(n);
  }
  return out;
}

inline constexpr double kMadNormalConsistency = 1.4826;

/// Normal-consistent MAD divided by the magnitude of the median.
inline double robust_cv(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("robust_cv: empty input");
  const double med = median(values);
  if (med == 0.0) throw std::domain_error("robust_cv: zero median");
  std::vector<double> dev(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) dev[i] = std::abs(values[i] - med);
  return kMadNormalConsistency * median(dev) / std::abs(med);
}

inline void write_draws_csv(std::ostream& os, const PosteriorDraws& d) {
  os << "iter";
  for (const auto& n : d.names) os << ',' << n;
  os << '\n';
  for (std::size_t i = 0; i < d.size(); ++i) {
    os << i;
    for (double v : d.row(i)) os << ',' << v;
    os << '\n';
  }
}

}  // namespace obdlab::mcmc
