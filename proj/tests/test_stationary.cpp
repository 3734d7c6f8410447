#include <doctest.h>

#include <cmath>
#include <functional>
#include <numeric>

#include "sharekin/error.hpp"
#include "sharekin/special.hpp"
#include "sharekin/stationary.hpp"

using namespace sharekin;
namespace {
doctest::Approx rel(double value, double eps) { return doctest::Approx(value).epsilon(eps).scale(value == 0.0 ? 1.0 : 0.0); }
}  // namespace

namespace {

void each_composition(std::int64_t n, std::int64_t m, const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> parts;
  std::function<void(std::int64_t, std::int64_t)> rec = [&](std::int64_t left_sites, std::int64_t left) {
    if (left_sites == 1) {
      parts.push_back(static_cast<int>(left));
      fn(parts);
      parts.pop_back();
      return;
    }
    for (std::int64_t k = 1; k <= left - (left_sites - 1); ++k) {
      parts.push_back(static_cast<int>(k));
      rec(left_sites - 1, left - k);
      parts.pop_back();
    }
  };
  rec(n, m);
}

// Single-site marginal of a measure over compositions, weight(parts) unnormalized.
std::vector<double> brute_marginal(std::int64_t n, std::int64_t m,
                                   const std::function<double(const std::vector<int>&)>& weight) {
  std::vector<double> p(static_cast<std::size_t>(m - n + 1), 0.0);
  double z = 0.0;
  each_composition(n, m, [&](const std::vector<int>& parts) {
    const double w = weight(parts);
    z += w;
    for (int k : parts) p[static_cast<std::size_t>(k - 1)] += w / static_cast<double>(n);
  });
  for (auto& v : p) v /= z;
  return p;
}

double product_weight(const std::vector<int>& parts, double b) {
  double w = 1.0;
  for (int k : parts) w *= std::pow(double(k), -b);
  return w;
}

double tv(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / 2.0;
}

double series_zeta(double s) {
  // direct sum plus the Euler-Maclaurin tail from K
  const int k = 100000;
  double sum = 0.0;
  for (int m = k - 1; m >= 1; --m) sum += std::pow(double(m), -s);
  return sum + std::pow(double(k), 1.0 - s) / (s - 1.0) + 0.5 * std::pow(double(k), -s) +
         s * std::pow(double(k), -s - 1.0) / 12.0;
}

}  // namespace

TEST_CASE("partition table examples") {
  const auto t = partition_dp(3, 6, 2.0);
  CHECK(std::exp(t.log_z(1, 3)) == rel(1.0 / (9.0 * kZeta2), 1e-12));
  CHECK(std::exp(t.log_z(2, 3)) == rel(1.0 / (2.0 * kZeta2 * kZeta2), 1e-12));
  CHECK(std::exp(t.log_z(1, 3)) == rel(0.067547, 1e-5));
  CHECK(std::exp(t.log_z(2, 3)) == rel(0.184788, 1e-5));
  CHECK(std::isinf(t.log_z(3, 2)));
  const auto big = partition_dp(20, 60, 3.0);
  for (std::int64_t n = 1; n <= 20; ++n) CHECK(std::abs(big.log_z(n, n) + double(n) * std::log(zeta(3.0))) < 1e-10);
  CHECK_THROWS_AS(partition_dp(5, 4, 2.0), Error);
}

TEST_CASE("parallel partition table is bit-identical to the serial reference") {
  const auto a = partition_dp(40, 400, 2.0);
  const auto b = partition_dp_serial(40, 400, 2.0);
  for (std::int64_t n = 0; n <= 40; ++n) CHECK(a.row(n) == b.row(n));
}

TEST_CASE("binary-powered row matches the recursion") {
  const auto t = partition_dp(37, 300, 2.0);
  const auto row = partition_row(37, 300, 2.0);
  for (std::int64_t m = 37; m <= 300; ++m) CHECK(std::abs(row[m] - t.log_z(37, m)) < 1e-10);
}

TEST_CASE("exact site distribution examples") {
  const auto two = exact_site_distribution(2, 3, 2.0);
  REQUIRE(two.p.size() == 2);
  CHECK(two.p[0] == rel(0.5, 1e-12));
  CHECK(two.p[1] == rel(0.5, 1e-12));
  CHECK(two.provenance == Provenance::ExactDp);
}

TEST_CASE("exact DP equals brute-force enumeration") {
  for (double b : {0.0, 1.0, 2.0, 3.0})
    for (auto [n, m] : std::vector<std::pair<int, int>>{{3, 5}, {2, 9}, {4, 12}, {5, 14}, {6, 15}, {3, 40}}) {
      REQUIRE(composition_count(n, m) <= 10000);
      const auto dp = exact_site_distribution(n, m, b);
      const auto brute = brute_marginal(n, m, [b](const auto& parts) { return product_weight(parts, b); });
      REQUIRE(dp.p.size() == brute.size());
      for (std::size_t k = 0; k < brute.size(); ++k) CHECK(std::abs(dp.p[k] - brute[k]) < 1e-10);
    }
}

TEST_CASE("normalization and mean") {
  for (auto [n, m] : std::vector<std::pair<int, int>>{{2, 3}, {10, 100}, {128, 1280}, {508, 1016}}) {
    const auto p = exact_site_distribution(n, m, 2.0);
    CHECK(p.mass() == rel(1.0, 1e-9));
    CHECK(std::abs(p.mean() - double(m) / n) < 1e-6);
  }
}

TEST_CASE("ctmc examples") {
  const auto frozen = exact_ctmc_stationary(2, 2, 2.0);
  REQUIRE(frozen.p.size() == 1);
  CHECK(frozen.p[0] == rel(1.0, 1e-12));

  // three states: from (2,2) both hops at rate 2, from (1,3) and (3,1) one hop at rate 9/10
  const double p22 = 1.0 / (1.0 + 4.0 / 0.9);
  const auto sol = solve_ctmc(2, 4, 2.0);
  REQUIRE(sol.states.size() == 3);
  CHECK(sol.probability[sol.index_of({2, 2})] == rel(p22, 1e-12));
  CHECK(sol.probability[sol.index_of({1, 3})] == rel((1 - p22) / 2, 1e-12));
  CHECK(sol.marginal.p[1] == rel(p22, 1e-12));
  CHECK(sol.marginal.provenance == Provenance::ExactCtmc);
}

TEST_CASE("ctmc stationary vector is S times the product weights") {
  for (auto [n, m] : std::vector<std::pair<int, int>>{{3, 6}, {3, 9}, {4, 8}}) {
    const auto sol = solve_ctmc(n, m, 2.0);
    double z = 0.0;
    std::vector<double> w;
    for (const auto& s : sol.states) {
      double sum = 0.0, prod = 1.0;
      for (auto k : s) {
        sum += double(k) * k;
        prod /= double(k) * k;
      }
      w.push_back(sum * prod);
      z += sum * prod;
    }
    for (std::size_t i = 0; i < w.size(); ++i) CHECK(sol.probability[i] == rel(w[i] / z, 1e-10));
  }
}

TEST_CASE("ctmc capacity limit and compositions") {
  CHECK(composition_count(3, 6) == 10);
  CHECK(enumerate_compositions(3, 6).size() == 10);
  CHECK(enumerate_compositions(3, 6).front() == std::vector<Count>{1, 1, 4});
  CHECK_THROWS_AS(exact_ctmc_stationary(10, 40, 2.0), Error);
  try {
    exact_ctmc_stationary(10, 40, 2.0);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Capacity);
  }
}

TEST_CASE("factorized measure approaches the dynamics as M grows" * doctest::should_fail()) {
  // Recorded deviation: the dynamics' stationary measure carries an extra factor S = sum m^2, so at
  // fixed N the distance to the factorized measure does not shrink with M.
  double last = 1.0;
  for (int m : {5, 6, 12}) {
    const double d = tv(exact_site_distribution(3, m, 2.0).p, exact_ctmc_stationary(3, m, 2.0).p);
    CHECK(d < last);
    last = d;
  }
}

TEST_CASE("critical densities") {
  CHECK(critical_density(2.0, 508) == rel(3.47, 0.01));
  CHECK(critical_density(3.0) == rel(series_zeta(2.0) / series_zeta(3.0), 1e-9));
  CHECK(std::abs(critical_density(3.0) - 1.36843) < 1e-4);
  CHECK(critical_density(60.0) == rel(1.0, 1e-12));
  CHECK_THROWS_AS(critical_density(1.5), Error);
  CHECK_THROWS_AS(critical_density(2.0), Error);
}

TEST_CASE("chemical potential") {
  CHECK(chemical_potential(2.0) == rel(0.03726, 1e-3));
  CHECK(chemical_potential(1e-12) == rel(1.0, 1e-9));
  double last = 1.0;
  for (double rho = 0.1; rho < 10.0; rho += 0.1) {
    CHECK(chemical_potential(rho) < last);
    last = chemical_potential(rho);
  }
}

TEST_CASE("phase classification") {
  CHECK(classify_phase({3.0, 1.0, std::nullopt}) == Regime::Fluid);
  CHECK(classify_phase({3.0, 1.5, std::nullopt}) == Regime::Condensate);
  CHECK(classify_phase({2.0, 10.0, 508}) == Regime::Condensate);
  CHECK(classify_phase({2.0, 3.0, 508}) == Regime::Fluid);
  CHECK(classify_phase({1.0, 1e6, std::nullopt}) == Regime::Fluid);
  CHECK(classify_phase({2.0, 10.0, std::nullopt}) == Regime::Fluid);
}

TEST_CASE("fluid form at small m") {
  const double mu = chemical_potential(2.0);
  for (std::int64_t m = 1; m <= 5; ++m)
    CHECK(fluid_form(m, 508, 2.0) == rel(std::exp(-mu * m) / (kZeta2 * m * m), 5e-3));
}

TEST_CASE("bump geometry") {
  CHECK(bump_center(128, 10.0) == rel(887.2, 1e-3));
  CHECK(bump_height(508) == rel(kZeta2 / (508.0 * 508.0 * 2.0 * std::sqrt(M_PI * M_E)), 1e-14));
  const auto a = asymptotic_site_distribution(128, 10.0);
  CHECK(a.regime == Regime::Condensate);
  CHECK(a.profile.mass() == rel(1.0, 1e-9));
  CHECK(a.profile.provenance == Provenance::Asymptotic);
  // the bump maximum of the asymptotic profile in the upper quarter
  std::size_t best = 320;
  for (std::size_t k = 320; k < a.profile.p.size(); ++k)
    if (a.profile.p[k] > a.profile.p[best]) best = k;
  CHECK(std::abs(double(best + 1) - a.bump_center) < 78.0);
}

TEST_CASE("asymptote consistency at N = 508, rho = 2" * doctest::should_fail()) {
  // Recorded deviation: with mu = exp(-rho zeta(2)) the fluid asymptote is ~12% off at m = 1.
  const auto exact = exact_site_distribution(508, 1016, 2.0);
  const auto asym = asymptotic_site_distribution(508, 2.0);
  for (std::int64_t m = 1; m <= 50; ++m) CHECK(asym.profile.at(m) == rel(exact.at(m), 0.05));
}

TEST_CASE("collapse of the exact fluid form") {
  StationaryProfile p;
  p.n_sites = 256;
  p.total = 512;
  p.exponent = 2.0;
  for (std::int64_t m = 1; m <= 257; ++m) p.p.push_back(fluid_form(m, 256, 2.0));
  const auto c = scaling_collapse({p}, 2.0);
  for (const auto& pt : c.fluid[0]) CHECK(std::abs(pt.y - fluid_collapse_curve(pt.x)) < 1e-6);
  CHECK(condensate_collapse_curve(0.0) == rel(std::exp(-1.0) / std::sqrt(2 * M_PI), 1e-12));
  StationaryProfile wrong = p;
  wrong.exponent = 3.0;
  CHECK_THROWS_AS(scaling_collapse({wrong}, 2.0), Error);
  CHECK_THROWS_AS(scaling_collapse({p}, 3.0), Error);
}

TEST_CASE("stationary second moment") {
  const auto sol = solve_ctmc(3, 6, 2.0);
  double a2 = 0.0;
  for (std::size_t i = 0; i < sol.states.size(); ++i) {
    double s = 0.0;
    for (auto k : sol.states[i]) s += double(k) * k;
    a2 += sol.probability[i] * s / (3.0 * 36.0);
  }
  const auto sm = stationary_second_moment(3, 6);
  CHECK(sm.dynamics == rel(a2, 1e-10));
  double fact = 0.0;
  const auto dp = exact_site_distribution(3, 6, 2.0);
  for (std::int64_t m = 1; m <= 4; ++m) fact += dp.at(m) * double(m) * m / 36.0;
  CHECK(sm.factorized == rel(fact, 1e-10));
}
