#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "sharekin/error.hpp"
#include "sharekin/predictability.hpp"

using namespace sharekin;
namespace {
doctest::Approx rel(double value, double eps) { return doctest::Approx(value).epsilon(eps).scale(value == 0.0 ? 1.0 : 0.0); }
}  // namespace

namespace {

double direct_u(std::vector<double> r) {
  std::sort(r.begin(), r.end());
  const double t = static_cast<double>(r.size());
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += std::abs(r[i] - ((i + 1.0) / (t + 1.0) - 0.5));
  return s / t;
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  return d;
}

SharePanel two_product_panel(std::vector<double> first) {
  SharePanel p;
  p.products = {"0111", "7812"};
  for (std::size_t t = 0; t < first.size(); ++t) p.years.push_back(2000 + static_cast<int>(t));
  p.shares = {first, {}};
  for (double a : first) p.shares[1].push_back(1.0 - a);
  return p;
}

}  // namespace

TEST_CASE("growth rates") {
  const auto flat = growth_rates(two_product_panel({0.5, 0.5, 0.5}));
  CHECK(flat.horizon == 2);
  CHECK(flat.r[0] == std::vector<double>{0.0, 0.0});
  const auto up = growth_rates(two_product_panel({0.25, 0.5}));
  CHECK(up.r[0][0] == rel(0.30103, 1e-5));
  CHECK_THROWS_AS(growth_rates(two_product_panel({0.5})), Error);
  auto bad = two_product_panel({0.5, 0.5});
  bad.shares[0][1] = 0.0;
  CHECK_THROWS_AS(growth_rates(bad), Error);
}

TEST_CASE("panel growth rates reproduce the engine's for replica 0") {
  SimConfig cfg;
  cfg.params = ModelParams::from_density(60, 15);
  cfg.max_tau = 6;
  cfg.sample_taus = SimConfig::integer_taus(6);
  cfg.snapshot_taus = cfg.sample_taus;
  cfg.base_seed = 21;
  const auto g = growth_rates(synthetic_panel(cfg));
  const auto sim = simulated_growth_rates(run_ensemble(cfg));
  for (std::size_t t = 0; t < 6; ++t)
    for (std::size_t p = 0; p < 60; ++p) CHECK(std::abs(g.r[p][t] - sim.at(t, p, 0)) <= kTieTolerance);
}

TEST_CASE("excess growth examples") {
  Rng rng(1);
  std::vector<double> sims(98);
  std::iota(sims.begin(), sims.end(), 1.0);
  CHECK(excess_growth(49.5, sims, rng) == rel(0.0, 1e-12));
  CHECK(excess_growth(0.0, sims, rng) == rel(-0.49, 1e-12));
  CHECK(excess_growth(1000.0, sims, rng) == rel(99.0 / 100.0 - 0.5, 1e-12));
  CHECK_THROWS_AS(excess_growth(0.0, {}, rng), Error);
}

TEST_CASE("ranks are uniform on the lattice under the null, ties included") {
  std::mt19937_64 gen(4);
  std::discrete_distribution<int> d({0.5, 0.3, 0.15, 0.05});
  Rng rng(2);
  const int ns = 9, trials = 100000;
  std::vector<int> hist(ns + 1);
  std::vector<double> sims(ns);
  for (int k = 0; k < trials; ++k) {
    for (auto& s : sims) s = d(gen);
    const double r = excess_growth(d(gen), sims, rng);
    CHECK(std::abs(r) < 0.5);
    const int rank = static_cast<int>(std::lround((r + 0.5) * (ns + 2)));
    ++hist[rank - 1];
  }
  double chi2 = 0.0;
  const double expect = double(trials) / (ns + 1);
  for (int h : hist) chi2 += (h - expect) * (h - expect) / expect;
  CHECK(chi2 < 30.0);  // 9 degrees of freedom
}

TEST_CASE("unpredictability examples") {
  const int t = 10;
  std::vector<double> exact;
  for (int i = 1; i <= t; ++i) exact.push_back(double(i) / (t + 1) - 0.5);
  std::reverse(exact.begin(), exact.end());
  std::swap(exact[2], exact[7]);
  CHECK(unpredictability(exact) == rel(0.0, 1e-12));
  CHECK(unpredictability(std::vector<double>{0.0, 0.0, 0.0}) == rel(1.0 / 6.0, 1e-12));
  const std::vector<double> high(38, 0.49);
  CHECK(unpredictability(high) == rel(direct_u(high), 1e-14));
  CHECK(unpredictability(high) == rel(0.49, 1e-12));
}

TEST_CASE("unpredictability is permutation invariant") {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::vector<double> s(38);
  for (auto& x : s) x = u(gen);
  const double base = unpredictability(s);
  for (int k = 0; k < 20; ++k) {
    std::shuffle(s.begin(), s.end(), gen);
    CHECK(unpredictability(s) == base);
  }
}

TEST_CASE("shifting a uniform series never lowers U") {
  const int t = 38;
  std::vector<double> base;
  for (int i = 1; i <= t; ++i) base.push_back(double(i) / (t + 1) - 0.5);
  double last = 0.0;
  for (double c = 0.0; c <= 0.45; c += 0.01) {
    std::vector<double> s = base;
    for (auto& x : s) x += c;
    const double u = unpredictability(s);
    CHECK(u >= last - 1e-15);
    last = u;
  }
}

TEST_CASE("critical U") {
  CHECK(critical_U(38, 0.05, 200000) == rel(0.094, 0.03));
  // T = 1: U = |R - 0| with R uniform, so the 95th percentile is 0.475
  CHECK(critical_U(1, 0.05, 200000) == rel(0.475, 0.005));
  const double median = critical_U(12, 0.5, 100000, 3);
  const auto samples = null_unpredictability_samples(12, 100000, 9);
  const double above = std::count_if(samples.begin(), samples.end(), [&](double u) { return u > median; });
  CHECK(above / samples.size() == rel(0.5, 0.02));
  CHECK(critical_U(20, 0.05, 50000, 5) == critical_U_serial(20, 0.05, 50000, 5));
  CHECK_THROWS_AS(critical_U(0, 0.05, 1000), Error);
  CHECK_THROWS_AS(critical_U(5, 1.0, 1000), Error);
}

TEST_CASE("null U samples match an independent uniform draw") {
  const int t = 38;
  const auto lib = null_unpredictability_samples(t, 20000, 11);
  std::mt19937_64 gen(4242);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::vector<double> ref(20000);
  for (auto& x : ref) {
    std::vector<double> r(t);
    for (auto& v : r) v = u(gen);
    x = direct_u(r);
  }
  // two-sample KS critical value at 0.1% is about 0.0195 for n = m = 20000
  CHECK(ks_statistic(lib, ref) < 0.0195);
}

TEST_CASE("steady decline against a flat ensemble") {
  std::vector<double> a = {0.5};
  for (int t = 0; t < 20; ++t) a.push_back(a.back() * 0.9);
  const auto panel = two_product_panel(a);
  GrowthSamples sims(20, 2, 200);
  std::mt19937_64 gen(3);
  std::normal_distribution<double> noise(0.0, 0.005);
  for (std::size_t t = 0; t < 20; ++t)
    for (std::size_t p = 0; p < 2; ++p)
      for (std::size_t i = 0; i < 200; ++i) sims.at(t, p, i) = noise(gen);
  ReportOptions opts;
  opts.n_mc = 100000;
  const auto report = build_report(panel, sims, opts);
  CHECK(report.products[0].mean_excess < -0.4);
  CHECK(report.products[0].unpredictable);
  CHECK(report.products[0].unpredictability > 0.3);
  CHECK(report.n_sims == 200);
}

TEST_CASE("empirical at every ensemble median scores R = 0") {
  const auto panel = two_product_panel({0.5, 0.5, 0.5, 0.5});
  GrowthSamples sims(3, 2, 98);
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t p = 0; p < 2; ++p)
      for (std::size_t i = 0; i < 98; ++i) sims.at(t, p, i) = (i < 49 ? -1.0 : 1.0) * (1.0 + double(i % 49)) * 1e-3;
  ReportOptions opts;
  opts.n_mc = 100000;
  const auto report = build_report(panel, sims, opts);
  for (const auto& s : report.products) {
    for (double r : s.excess) CHECK(r == rel(0.0, 1e-12));
    CHECK(s.unpredictability == rel(1.0 / 6.0, 1e-12));
    CHECK(s.excess_variance == rel(0.0, 1e-12));
    CHECK(s.unpredictable == (s.unpredictability > report.threshold.critical));
  }
  CHECK(report.threshold.horizon == 3);
}

TEST_CASE("report rollups and determinism") {
  SimConfig cfg;
  cfg.params = ModelParams::from_density(40, 20);
  cfg.max_tau = 8;
  cfg.base_seed = 77;
  const auto panel = synthetic_panel(cfg, 0, 1990);
  ForecastOptions fo;
  fo.rho = 20;
  fo.runs = 30;
  fo.seed = 5;
  const auto sims = forecast_growth(panel, fo);
  ReportOptions ro;
  ro.n_mc = 20000;
  const auto par = build_report(panel, sims, ro);
  const auto ser = build_report_serial(panel, sims, ro);
  for (std::size_t p = 0; p < 40; ++p) {
    CHECK(par.products[p].excess == ser.products[p].excess);
    CHECK(par.products[p].unpredictable == (par.products[p].unpredictability > par.threshold.critical));
  }
  for (int digits : {1, 2}) {
    std::size_t total = 0;
    for (const auto& r : par.rollups)
      if (r.digits == digits) {
        total += r.n_predictable + r.n_unpredictable;
        CHECK(r.prefix.size() == static_cast<std::size_t>(digits));
      }
    CHECK(total == 40);
  }
  std::ostringstream rep, roll, thr;
  write_report_csv(rep, par);
  write_rollup_csv(roll, par);
  write_threshold_json(thr, par.threshold);
  CHECK(rep.str().rfind("product,U,mean_excess,excess_var,class\n", 0) == 0);
  CHECK(roll.str().rfind("prefix,digits,mean_excess,n_predictable,n_unpredictable\n", 0) == 0);
  CHECK(thr.str().find("\"U_crit\"") != std::string::npos);
}

TEST_CASE("misaligned horizons are rejected") {
  const auto panel = two_product_panel({0.5, 0.4, 0.3});
  CHECK_THROWS_AS(build_report(panel, GrowthSamples(3, 2, 10)), Error);
  CHECK_THROWS_AS(build_report(panel, GrowthSamples(2, 3, 10)), Error);
}

TEST_CASE("reanchored forecast has one ensemble per year") {
  SimConfig cfg;
  cfg.params = ModelParams::from_density(30, 10);
  cfg.max_tau = 4;
  const auto panel = synthetic_panel(cfg, 0, 2000);
  ForecastOptions fo;
  fo.rho = 10;
  fo.runs = 12;
  fo.mode = ForecastMode::Reanchored;
  const auto g = forecast_growth(panel, fo);
  CHECK(g.steps() == 4);
  CHECK(g.replicas() == 12);
  const auto cfg2 = forecast_config(panel, fo);
  CHECK(cfg2.params.total_particles == 300);
  CHECK(cfg2.max_tau == 4.0);
  CHECK(cfg2.initial_configuration() == discretize_shares(panel.column(0), 300));
}
