#include <doctest.h>

#include <numeric>
#include <random>

#include "sharekin/error.hpp"
#include "sharekin/model.hpp"

using namespace sharekin;
namespace {
doctest::Approx rel(double value, double eps) { return doctest::Approx(value).epsilon(eps).scale(value == 0.0 ? 1.0 : 0.0); }
}  // namespace

namespace {
Configuration make(std::vector<Count> c, double b = 2.0) { return Configuration(std::move(c), b); }
}  // namespace

TEST_CASE("params invariants") {
  const ModelParams p(508, 25400, 2.0);
  CHECK(p.density() == 50.0);
  CHECK(p.unit_share() * static_cast<double>(p.total_particles) == 1.0);
  CHECK_THROWS_AS(ModelParams(1, 5, 2.0), Error);
  CHECK_THROWS_AS(ModelParams(10, 9, 2.0), Error);
  CHECK_THROWS_AS(ModelParams(10, 20, -1.0), Error);
  CHECK(ModelParams::from_density(128, 10).total_particles == 1280);
}

TEST_CASE("transfer rate examples") {
  const auto c = make({2, 1, 1});
  CHECK(transfer_rate(c, 0, 1) == rel(4.0 / 6.0, 1e-14));
  CHECK(transfer_rate(c, 1, 0) == 0.0);
  CHECK(transfer_rate(make({3, 3}, 0.0), 0, 1) == rel(0.5, 1e-12));
  CHECK_THROWS_AS(transfer_rate(c, 1, 1), Error);
}

TEST_CASE("total exit rate examples") {
  CHECK(total_exit_rate(make({2, 1, 1})) == rel(4.0 * 2.0 / 6.0, 1e-12));
  for (double b : {0.0, 1.0, 2.0, 3.5}) CHECK(total_exit_rate(make({1, 1, 1, 1}, b)) == 0.0);
  const int rho = 7, n = 9;
  CHECK(total_exit_rate(make(std::vector<Count>(n, rho))) == rel(double(rho * rho) * (n - 1), 1e-12));
}

TEST_CASE("exit rate equals the sum over ordered pairs") {
  std::mt19937 gen(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Count> counts(6);
    for (auto& m : counts) m = 1 + static_cast<Count>(gen() % 6);
    const auto c = make(counts, 1.0 + 0.5 * (trial % 4));
    double sum = 0.0;
    for (std::size_t p = 0; p < c.size(); ++p)
      for (std::size_t q = 0; q < c.size(); ++q)
        if (p != q) sum += transfer_rate(c, p, q);
    CHECK(total_exit_rate(c) == rel(sum, 1e-12));
  }
}

TEST_CASE("rate numerator is symmetric when both sites can emit") {
  const auto c = make({5, 2, 9, 1});
  const double s = c.weight_sum();
  CHECK(transfer_rate(c, 0, 2) * s == rel(transfer_rate(c, 2, 0) * s, 1e-12));
  CHECK(transfer_rate(c, 1, 2) * s == rel(transfer_rate(c, 2, 1) * s, 1e-12));
}

TEST_CASE("b = 1 rate is m_p m_q / M") {
  const auto c = make({4, 3, 5}, 1.0);
  CHECK(transfer_rate(c, 0, 2) == rel(20.0 / 12.0, 1e-12));
}

TEST_CASE("discretize examples") {
  CHECK(discretize_shares({{0.5, 0.5}}, 4) == make({2, 2}));
  CHECK(discretize_shares({{0.7, 0.2, 0.1}}, 10) == make({7, 2, 1}));
  CHECK(discretize_shares({{0.999, 0.001}}, 10) == make({9, 1}));
  CHECK_THROWS_AS(discretize_shares({{0.5, 0.3, 0.2}}, 2), Error);
}

TEST_CASE("shares round trip") {
  CHECK(shares_of(make({2, 2})).shares == std::vector<double>{0.5, 0.5});
  CHECK(shares_of(make({9, 1})).shares == std::vector<double>{0.9, 0.1});
  std::mt19937 gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Count> counts(2 + gen() % 30);
    for (auto& m : counts) m = 1 + static_cast<Count>(gen() % 400);
    const auto c = make(counts);
    CHECK(discretize_shares(shares_of(c), c.total()) == c);
  }
}

TEST_CASE("moves conserve particles and keep the floor") {
  std::mt19937 gen(5);
  auto c = make(std::vector<Count>(12, 4), 2.0);
  for (int k = 0; k < 20000; ++k) {
    const std::size_t s = gen() % 12, d = gen() % 12;
    if (s == d || c[s] < 2) continue;
    c.move_particle(s, d);
  }
  const auto counts = c.counts();
  CHECK(std::accumulate(counts.begin(), counts.end(), std::int64_t{0}) == 48);
  CHECK(*std::min_element(counts.begin(), counts.end()) >= 1);
  const double cached = c.weight_sum();
  c.refresh_weight_sum();
  CHECK(cached == rel(c.weight_sum(), 1e-12));
}

TEST_CASE("large exponents stay finite through the log scale") {
  const auto c = make({400, 2, 1}, 200.0);
  CHECK(std::isfinite(c.scaled_weight_sum()));
  CHECK(c.log_scale() > 0.0);
  // (2 * 400)^200 / (400^200 + 2^200 + 1) = 2^200 to double precision
  const double expect = std::exp(200.0 * std::log(2.0));
  CHECK(transfer_rate(c, 1, 0) == rel(expect, 1e-9));
  CHECK(transfer_rate(c, 0, 1) == rel(expect, 1e-9));
  CHECK(transfer_rate(c, 2, 0) == 0.0);
  CHECK(std::isfinite(total_exit_rate(c)));
}

TEST_CASE("site weight fast paths") {
  for (Count m : {1, 2, 7, 1000})
    for (double b : {0.0, 1.0, 2.0, 3.0, 2.5}) CHECK(site_weight(m, b) == rel(std::pow(double(m), b), 1e-14));
}
