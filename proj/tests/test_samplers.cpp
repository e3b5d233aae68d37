#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <sstream>

#include "obdlab/samplers.hpp"

using namespace obdlab;
using namespace obdlab::mcmc;

namespace {
McmcConfig config(std::vector<double> init, std::size_t keep) {
  McmcConfig c;
  c.n_adapt = 1000;
  c.n_burn = 500;
  c.n_keep = keep;
  c.init = std::move(init);
  return c;
}

double sample_var(const std::vector<double>& x) {
  const double m = mean(x);
  double s = 0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}
}  // namespace

TEST(RunMwg, StandardNormalMoments) {
  auto rng = StreamRng::keyed({1});
  const auto d = run_mwg([](std::span<const double> x) { return -0.5 * x[0] * x[0]; }, config({0.0}, 10000), rng);
  const auto c = d.column(0);
  EXPECT_NEAR(mean(c), 0.0, 0.05);
  EXPECT_NEAR(sample_var(c), 1.0, 0.1);
}

TEST(RunMwg, IndependentComponentsAreUncorrelated) {
  auto rng = StreamRng::keyed({2});
  const auto d = run_mwg(
      [](std::span<const double> x) { return -0.5 * x[0] * x[0] - 0.5 * (x[1] - 3) * (x[1] - 3) / 4.0; },
      config({0.0, 0.0}, 10000), rng);
  const auto a = d.column(0), b = d.column(1);
  const double ma = mean(a), mb = mean(b);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  EXPECT_NEAR(sab / std::sqrt(saa * sbb), 0.0, 0.05);
  EXPECT_NEAR(mb, 3.0, 0.1);
}

TEST(RunMwg, RespectsBoundedSupport) {
  auto rng = StreamRng::keyed({3});
  const auto d = run_mwg(
      [](std::span<const double> x) { return (x[0] > 0.0 && x[0] < 1.0) ? 0.0 : -std::numeric_limits<double>::infinity(); },
      config({0.5}, 5000), rng);
  for (double v : d.column(0)) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(RunMwg, AdaptationFreezesAfterAdaptPhase) {
  auto rng = StreamRng::keyed({4});
  auto cfg = config({0.0}, 500);
  cfg.trace_scales = true;
  const auto d = run_mwg([](std::span<const double> x) { return -0.5 * x[0] * x[0]; }, cfg, rng);
  ASSERT_EQ(d.scale_trace.size(), 500u);
  for (double s : d.scale_trace) EXPECT_EQ(s, d.step_scales[0]);
  EXPECT_GT(d.acceptance[0], 0.2);
  EXPECT_LT(d.acceptance[0], 0.5);
}

TEST(RunMwg, ErrorsOnNonFiniteInitAndTotalRejection) {
  auto rng = StreamRng::keyed({5});
  EXPECT_THROW(run_mwg([](std::span<const double>) { return std::nan(""); }, config({0.0}, 10), rng),
               std::domain_error);
  // Only the exact starting point has finite density.
  auto spike = [](std::span<const double> x) {
    return x[0] == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  };
  EXPECT_THROW(run_mwg(spike, config({0.0}, 10), rng), std::runtime_error);
}

TEST(RunMwg, DeterministicGivenSeed) {
  auto target = [](std::span<const double> x) { return -std::abs(x[0]); };
  auto r1 = StreamRng::keyed({77});
  auto r2 = StreamRng::keyed({77});
  EXPECT_EQ(run_mwg(target, config({0.0}, 300), r1).values, run_mwg(target, config({0.0}, 300), r2).values);
}

// Discretized 1-D target: a two-component normal mixture, binned.
TEST(RunMwg, HistogramMatchesTargetDensity) {
  auto logpdf = [](double x) {
    return std::log(0.3 * std::exp(-0.5 * (x + 1.5) * (x + 1.5)) + 0.7 * std::exp(-0.5 * (x - 1.0) * (x - 1.0) / 0.25) / 0.5);
  };
  auto rng = StreamRng::keyed({6});
  auto cfg = config({0.0}, 50000);
  const auto d = run_mwg([&](std::span<const double> x) { return logpdf(x[0]); }, cfg, rng);
  // Thin to reduce autocorrelation before the chi-square comparison.
  std::vector<double> xs;
  for (std::size_t i = 0; i < d.size(); i += 10) xs.push_back(d.values[i]);
  const int nb = 12;
  const double lo = -4.0, hi = 3.0, w = (hi - lo) / nb;
  std::vector<double> obs(nb + 2, 0.0), p(nb + 2, 0.0);
  for (double x : xs) {
    const int b = x < lo ? 0 : (x >= hi ? nb + 1 : 1 + static_cast<int>((x - lo) / w));
    obs[std::min(b, nb + 1)] += 1.0;
  }
  // Reference bin masses by fine trapezoid integration of the normalized density.
  double total = 0.0;
  const int fine = 20000;
  const double a = -12.0, bnd = 12.0, h = (bnd - a) / fine;
  for (int k = 0; k < fine; ++k) {
    const double x = a + (k + 0.5) * h;
    const double m = std::exp(logpdf(x)) * h;
    total += m;
    const int b = x < lo ? 0 : (x >= hi ? nb + 1 : 1 + static_cast<int>((x - lo) / w));
    p[std::min(b, nb + 1)] += m;
  }
  double chi2 = 0.0;
  for (int b = 0; b < nb + 2; ++b) {
    const double e = p[b] / total * static_cast<double>(xs.size());
    if (e > 5.0) chi2 += (obs[b] - e) * (obs[b] - e) / e;
  }
  const boost::math::chi_squared dist(nb + 1);
  EXPECT_GT(boost::math::cdf(boost::math::complement(dist, chi2)), 0.001) << "chi2=" << chi2;
}

TEST(Summarize, ConstantAndIndicatorTransforms) {
  auto rng = StreamRng::keyed({8});
  const auto d = run_mwg([](std::span<const double> x) { return -0.5 * x[0] * x[0]; }, config({0.0}, 4000), rng);
  const auto c = summarize(d, [](std::span<const double>) { return std::vector<double>{2.5}; }, 0.0);
  EXPECT_DOUBLE_EQ(c[0].mean, 2.5);
  EXPECT_DOUBLE_EQ(c[0].lower, 2.5);
  EXPECT_DOUBLE_EQ(c[0].median, 2.5);
  EXPECT_DOUBLE_EQ(c[0].upper, 2.5);
  const auto ind =
      summarize(d, [](std::span<const double> x) { return std::vector<double>{x[0] > 0.3 ? 1.0 : 0.0}; }, 0.5);
  EXPECT_DOUBLE_EQ(ind[0].p_above, ind[0].mean);
  const auto id = summarize(d, [](std::span<const double> x) { return std::vector<double>{x[0]}; });
  EXPECT_NEAR(id[0].mean, 0.0, 0.1);
  EXPECT_NEAR(id[0].lower, -1.2816, 0.15);
  EXPECT_NEAR(id[0].upper, 1.2816, 0.15);
}

TEST(Summarize, EmptyDrawsRejected) {
  PosteriorDraws d;
  EXPECT_THROW(summarize(d, [](std::span<const double>) { return std::vector<double>{0.0}; }), std::invalid_argument);
}

TEST(RobustCv, ConstantIsZero) {
  const std::vector<double> v(10, 4.2);
  EXPECT_DOUBLE_EQ(robust_cv(v), 0.0);
}

TEST(RobustCv, ShiftedNormalSample) {
  auto rng = StreamRng::keyed({9});
  std::normal_distribution<double> z;
  std::vector<double> v(10000);
  for (double& x : v) x = 10.0 + z(rng);
  EXPECT_NEAR(robust_cv(v), 1.4826 * 0.6745 / 10.0, 0.01);
}

TEST(RobustCv, ScaleInvariantAndErrors) {
  const std::vector<double> v{1.0, 2.0, 4.0, 7.0, 11.0};
  std::vector<double> k = v;
  for (double& x : k) x *= 3.7;
  EXPECT_NEAR(robust_cv(v), robust_cv(k), 1e-12);
  EXPECT_THROW(robust_cv(std::vector<double>{}), std::invalid_argument);
  EXPECT_THROW(robust_cv(std::vector<double>{-1.0, 0.0, 1.0}), std::domain_error);
}

TEST(Draws, CsvDump) {
  auto rng = StreamRng::keyed({10});
  auto cfg = config({0.0, 1.0}, 3);
  cfg.n_adapt = 0;
  const auto d = run_mwg([](std::span<const double> x) { return -x[0] * x[0] - x[1] * x[1]; }, cfg, rng, {"a", "b"});
  std::ostringstream os;
  write_draws_csv(os, d);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "iter,a,b");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 3);
}

TEST(McmcConfig, Profiles) {
  EXPECT_EQ(McmcConfig::full().n_keep, 2000u);
  EXPECT_EQ(McmcConfig::full().n_adapt, 1000u);
  EXPECT_DOUBLE_EQ(McmcConfig::full().target_accept, 0.35);
  EXPECT_LT(McmcConfig::fast().n_keep, McmcConfig::full().n_keep);
  McmcConfig bad;
  bad.target_accept = 0.95;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}
