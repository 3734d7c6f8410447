#include "sharekin/stationary.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "sharekin/error.hpp"
#include "sharekin/special.hpp"

namespace sharekin {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<double> log_factors(std::int64_t total, double b) {
  std::vector<double> out(static_cast<std::size_t>(total) + 1, kNegInf);
  for (std::int64_t m = 1; m <= total; ++m) out[static_cast<std::size_t>(m)] = log_site_factor(m, b);
  return out;
}

// log sum_k exp(terms(k)) over k in [lo, hi], two passes for stability.
template <class Term>
double log_sum_exp(std::int64_t lo, std::int64_t hi, Term&& term) {
  double peak = kNegInf;
  for (std::int64_t k = lo; k <= hi; ++k) peak = std::max(peak, term(k));
  if (peak == kNegInf) return kNegInf;
  double sum = 0.0;
  for (std::int64_t k = lo; k <= hi; ++k) sum += std::exp(term(k) - peak);
  return peak + std::log(sum);
}

// Entry m of row n from row n-1: sum_{k=1}^{m-n+1} f(k) Z_{n-1,m-k}.
double dp_entry(const std::vector<double>& logf, const std::vector<double>& prev, std::int64_t n, std::int64_t m) {
  if (m < n) return kNegInf;
  return log_sum_exp(1, m - n + 1, [&](std::int64_t k) {
    return logf[static_cast<std::size_t>(k)] + prev[static_cast<std::size_t>(m - k)];
  });
}

void check_dp_args(std::int64_t n_sites, std::int64_t total) {
  if (n_sites < 1) throw invalid_argument("partition table needs at least one site");
  if (total < n_sites) throw infeasible("total particles must be at least the number of sites");
}

// c[m] = log sum_k exp(a[k] + b[m-k]) for m = 0..M.
std::vector<double> log_convolve(const std::vector<double>& a, const std::vector<double>& b) {
  const auto size = static_cast<std::int64_t>(a.size());
  std::vector<double> c(a.size(), kNegInf);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t m = 0; m < size; ++m)
    c[static_cast<std::size_t>(m)] = log_sum_exp(0, m, [&](std::int64_t k) {
      return a[static_cast<std::size_t>(k)] + b[static_cast<std::size_t>(m - k)];
    });
  return c;
}

}  // namespace

double log_site_factor(std::int64_t m, double b) {
  const double lm = -b * std::log(static_cast<double>(m));
  return b > 1.0 ? lm - std::log(zeta(b)) : lm;
}

PartitionTable::PartitionTable(std::int64_t n_sites, std::int64_t total, double b)
    : n_sites_(n_sites), total_(total), b_(b),
      rows_(static_cast<std::size_t>(n_sites) + 1, std::vector<double>(static_cast<std::size_t>(total) + 1, kNegInf)) {
  rows_[0][0] = 0.0;
}

PartitionTable partition_dp_serial(std::int64_t n_sites, std::int64_t total, double b) {
  check_dp_args(n_sites, total);
  PartitionTable table(n_sites, total, b);
  const auto logf = log_factors(total, b);
  for (std::int64_t n = 1; n <= n_sites; ++n) {
    const auto& prev = table.row(n - 1);
    auto& row = table.row(n);
    for (std::int64_t m = n; m <= total; ++m) row[static_cast<std::size_t>(m)] = dp_entry(logf, prev, n, m);
  }
  return table;
}

PartitionTable partition_dp(std::int64_t n_sites, std::int64_t total, double b) {
  check_dp_args(n_sites, total);
  PartitionTable table(n_sites, total, b);
  const auto logf = log_factors(total, b);
  for (std::int64_t n = 1; n <= n_sites; ++n) {
    const auto& prev = table.row(n - 1);
    auto& row = table.row(n);
    // Entry cost grows with m; dynamic scheduling balances the triangle.
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t m = n; m <= total; ++m) row[static_cast<std::size_t>(m)] = dp_entry(logf, prev, n, m);
  }
  return table;
}

std::vector<double> partition_row(std::int64_t n, std::int64_t total, double b) {
  check_dp_args(std::max<std::int64_t>(n, 0), std::max(total, n));
  std::vector<double> result(static_cast<std::size_t>(total) + 1, kNegInf);
  result[0] = 0.0;
  std::vector<double> base = log_factors(total, b);
  for (std::int64_t e = n; e > 0; e >>= 1) {
    if (e & 1) result = log_convolve(result, base);
    if (e > 1) base = log_convolve(base, base);
  }
  return result;
}

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::ExactDp: return "exact-DP";
    case Provenance::ExactCtmc: return "exact-CTMC";
    case Provenance::Asymptotic: return "asymptotic";
    case Provenance::Simulated: return "simulated";
  }
  return "unknown";
}

double StationaryProfile::mass() const {
  double s = 0.0;
  for (double v : p) s += v;
  return s;
}

double StationaryProfile::moment(int k) const {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::pow(static_cast<double>(i + 1), k) * p[i];
  return s;
}

double StationaryProfile::mean() const { return moment(1); }

StationaryProfile exact_site_distribution(const PartitionTable& table) {
  const std::int64_t n = table.n_sites();
  const std::int64_t total = table.total();
  if (n < 2) throw invalid_argument("single-site distribution needs at least two sites");
  StationaryProfile out;
  out.n_sites = n;
  out.total = total;
  out.exponent = table.exponent();
  out.provenance = Provenance::ExactDp;
  const double log_norm = table.log_z(n, total);
  for (std::int64_t m = 1; m <= total - n + 1; ++m)
    out.p.push_back(std::exp(log_site_factor(m, table.exponent()) + table.log_z(n - 1, total - m) - log_norm));
  return out;
}

StationaryProfile exact_site_distribution(std::int64_t n_sites, std::int64_t total, double b) {
  if (n_sites < 2) throw invalid_argument("single-site distribution needs at least two sites");
  return exact_site_distribution(partition_dp(n_sites, total, b));
}

// ---------------------------------------------------------------------------------------------
// Exact CTMC

std::int64_t composition_count(std::int64_t n_sites, std::int64_t total) {
  if (n_sites < 1 || total < n_sites) return 0;
  // C(M-1, N-1) with saturation.
  const std::int64_t top = total - 1;
  std::int64_t k = std::min(n_sites - 1, top - (n_sites - 1));
  long double c = 1.0L;
  for (std::int64_t i = 1; i <= k; ++i) {
    c = c * static_cast<long double>(top - k + i) / static_cast<long double>(i);
    if (c > 9.0e18L) return std::numeric_limits<std::int64_t>::max();
  }
  return static_cast<std::int64_t>(std::llround(c));
}

std::vector<std::vector<Count>> enumerate_compositions(std::int64_t n_sites, std::int64_t total) {
  std::vector<std::vector<Count>> out;
  if (n_sites < 1 || total < n_sites) return out;
  std::vector<Count> current(static_cast<std::size_t>(n_sites), 1);
  // Recursive fill in lexicographic order of (m_1, ..., m_N).
  auto fill = [&](auto&& self, std::size_t pos, std::int64_t remaining) -> void {
    const auto left = static_cast<std::int64_t>(current.size() - pos - 1);
    if (left == 0) {
      current[pos] = static_cast<Count>(remaining);
      out.push_back(current);
      return;
    }
    for (std::int64_t m = 1; m <= remaining - left; ++m) {
      current[pos] = static_cast<Count>(m);
      self(self, pos + 1, remaining - m);
    }
  };
  fill(fill, 0, total);
  return out;
}

std::size_t CtmcSolution::index_of(const std::vector<Count>& state) const {
  auto it = std::lower_bound(states.begin(), states.end(), state);
  if (it == states.end() || *it != state) throw invalid_argument("not a valid composition");
  return static_cast<std::size_t>(it - states.begin());
}

CtmcSolution solve_ctmc(std::int64_t n_sites, std::int64_t total, double b) {
  if (n_sites < 2) throw invalid_argument("CTMC needs at least two sites");
  if (total < n_sites) throw infeasible("total particles must be at least the number of sites");
  if (composition_count(n_sites, total) > kCtmcStateLimit) throw capacity_error("state space exceeds the CTMC capacity");

  CtmcSolution sol;
  sol.states = enumerate_compositions(n_sites, total);
  const auto n_states = static_cast<Eigen::Index>(sol.states.size());
  const auto n = static_cast<std::size_t>(n_sites);

  // Solve Q^T pi = 0 with the last equation replaced by sum(pi) = 1.
  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<double> diagonal(sol.states.size(), 0.0);
  const Eigen::Index last = n_states - 1;
  std::vector<Count> target;
  for (std::size_t s = 0; s < sol.states.size(); ++s) {
    const auto& state = sol.states[s];
    double weight_sum = 0.0;
    for (Count c : state) weight_sum += site_weight(c, b);
    for (std::size_t p = 0; p < n; ++p) {
      if (state[p] < 2) continue;
      for (std::size_t q = 0; q < n; ++q) {
        if (q == p) continue;
        const double rate = site_weight(state[p], b) * site_weight(state[q], b) / weight_sum;
        target = state;
        --target[p];
        ++target[q];
        const auto t = static_cast<Eigen::Index>(sol.index_of(target));
        if (t != last) triplets.emplace_back(t, static_cast<Eigen::Index>(s), rate);
        diagonal[s] -= rate;
      }
    }
  }
  for (Eigen::Index s = 0; s < n_states; ++s) {
    if (s != last) triplets.emplace_back(s, s, diagonal[static_cast<std::size_t>(s)]);
    triplets.emplace_back(last, s, 1.0);
  }
  Eigen::SparseMatrix<double> a(n_states, n_states);
  a.setFromTriplets(triplets.begin(), triplets.end());
  a.makeCompressed();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_states);
  rhs[last] = 1.0;

  Eigen::SparseLU<Eigen::SparseMatrix<double>> solver;
  solver.compute(a);
  if (solver.info() != Eigen::Success) throw domain_error("generator factorization failed");
  const Eigen::VectorXd pi = solver.solve(rhs);
  sol.probability.assign(pi.data(), pi.data() + n_states);

  auto& marginal = sol.marginal;
  marginal.n_sites = n_sites;
  marginal.total = total;
  marginal.exponent = b;
  marginal.provenance = Provenance::ExactCtmc;
  marginal.p.assign(static_cast<std::size_t>(total - n_sites + 1), 0.0);
  for (std::size_t s = 0; s < sol.states.size(); ++s)
    for (Count c : sol.states[s]) marginal.p[static_cast<std::size_t>(c - 1)] += sol.probability[s] / static_cast<double>(n);
  return sol;
}

StationaryProfile exact_ctmc_stationary(std::int64_t n_sites, std::int64_t total, double b) {
  return solve_ctmc(n_sites, total, b).marginal;
}

// ---------------------------------------------------------------------------------------------
// Phase structure and b = 2 asymptotics

double critical_density(double b, std::optional<std::int64_t> n_sites) {
  if (b > 2.0) return zeta(b - 1.0) / zeta(b);
  if (b == 2.0 && n_sites) {
    if (*n_sites < 2) throw domain_error("critical density needs N >= 2");
    return std::log(static_cast<double>(*n_sites) / kZeta2) / kZeta2;
  }
  throw domain_error("no finite critical density for b < 2 or for b = 2 without N");
}

double chemical_potential(double rho) {
  if (!(rho > 0.0)) throw domain_error("density must be positive");
  return std::exp(-rho * kZeta2);
}

std::string to_string(Regime r) { return r == Regime::Fluid ? "Fluid" : "Condensate"; }

Regime classify_phase(const PhasePoint& point) {
  if (!(point.density > 0.0) || !(point.exponent >= 0.0)) throw invalid_argument("invalid phase point");
  if (point.exponent > 2.0) return point.density > critical_density(point.exponent) ? Regime::Condensate : Regime::Fluid;
  if (point.exponent == 2.0 && point.n_sites)
    return point.density > critical_density(2.0, point.n_sites) ? Regime::Condensate : Regime::Fluid;
  return Regime::Fluid;
}

namespace {

double log_phi(double eta) {
  if (eta >= kPhiCrossover) return -0.5 * std::log(2.0 * std::numbers::pi * eta) - eta;
  const double v = phi_quadrature(eta).value;
  return v > 0.0 ? std::log(v) : kNegInf;
}

double base_eta(std::int64_t n_sites, double rho) {
  return static_cast<double>(n_sites) * chemical_potential(rho) / kZeta2;
}

}  // namespace

double fluid_form(std::int64_t m, std::int64_t n_sites, double rho) {
  const double x = static_cast<double>(m);
  const double eta0 = base_eta(n_sites, rho);
  return std::exp(-eta0 * std::expm1(x * kZeta2 / static_cast<double>(n_sites))) / (kZeta2 * x * x);
}

double closed_form(std::int64_t m, std::int64_t n_sites, double rho) {
  const double x = static_cast<double>(m);
  const double theta = x * kZeta2 / static_cast<double>(n_sites);
  const double eta0 = base_eta(n_sites, rho);
  const double log_ratio = theta + log_phi(eta0 * std::exp(theta)) - log_phi(eta0);
  return std::exp(log_ratio) / (kZeta2 * x * x);
}

double condensate_form(std::int64_t m, std::int64_t n_sites, double rho) {
  const double x_m = static_cast<double>(m);
  const double gap = std::log(kZeta2 / (static_cast<double>(n_sites) * chemical_potential(rho)));
  const double x = kZeta2 * x_m / static_cast<double>(n_sites) - gap;
  return gap * gap * std::exp(x / 2.0 - std::exp(x)) / (std::sqrt(2.0 * std::numbers::pi) * kZeta2 * x_m * x_m);
}

double bump_height(std::int64_t n_sites) {
  const double n = static_cast<double>(n_sites);
  return kZeta2 / (n * n * 2.0 * std::sqrt(std::numbers::pi * std::numbers::e));
}

double bump_center(std::int64_t n_sites, double rho) {
  const double n = static_cast<double>(n_sites);
  const double m_c = n / kZeta2 * std::log(n / kZeta2);
  return rho * n - m_c - std::numbers::ln2 * n / kZeta2;
}

AsymptoticProfile asymptotic_site_distribution(std::int64_t n_sites, double rho) {
  if (n_sites < 2) throw invalid_argument("asymptotics need N >= 2");
  if (!(rho > 0.0)) throw invalid_argument("density must be positive");
  AsymptoticProfile out;
  out.mu = chemical_potential(rho);
  out.rho_c = critical_density(2.0, n_sites);
  out.regime = rho > out.rho_c ? Regime::Condensate : Regime::Fluid;
  out.bump_center = bump_center(n_sites, rho);

  const auto total = static_cast<std::int64_t>(std::llround(rho * static_cast<double>(n_sites)));
  auto& prof = out.profile;
  prof.n_sites = n_sites;
  prof.total = std::max(total, n_sites);
  prof.exponent = 2.0;
  prof.provenance = Provenance::Asymptotic;
  const std::int64_t top = prof.total - n_sites + 1;
  prof.p.resize(static_cast<std::size_t>(top));
  for (std::int64_t m = 1; m <= top; ++m)
    prof.p[static_cast<std::size_t>(m - 1)] =
        out.regime == Regime::Fluid ? fluid_form(m, n_sites, rho) : closed_form(m, n_sites, rho);
  out.normalization = prof.mass();
  for (double& v : prof.p) v /= out.normalization;
  return out;
}

double fluid_collapse_curve(double x) { return std::exp(1.0 - std::exp(x)); }

double condensate_collapse_curve(double x) { return std::exp(x / 2.0 - std::exp(x)) / std::sqrt(2.0 * std::numbers::pi); }

CollapsedCurves scaling_collapse(const std::vector<StationaryProfile>& profiles, double rho) {
  CollapsedCurves out;
  const double mu = chemical_potential(rho);
  for (const auto& prof : profiles) {
    if (prof.exponent != 2.0) throw invalid_argument("scaling collapse is defined for b = 2");
    if (std::abs(prof.density() - rho) > 1e-9 * rho) throw invalid_argument("profile density does not match rho");
    const double n = static_cast<double>(prof.n_sites);
    const double gap = std::log(kZeta2 / (n * mu));
    auto& fluid = out.fluid.emplace_back();
    auto& cond = out.condensate.emplace_back();
    for (std::size_t i = 0; i < prof.p.size(); ++i) {
      if (!(prof.p[i] > 0.0)) continue;
      const double m = static_cast<double>(i + 1);
      const double scaled = m * m * kZeta2 * prof.p[i];
      const double x = kZeta2 * m / n;
      fluid.push_back({x, std::pow(scaled, kZeta2 / (n * mu))});
      cond.push_back({x - gap, scaled / (gap * gap)});
    }
  }
  return out;
}

StationarySecondMoment stationary_second_moment(std::int64_t n_sites, std::int64_t total) {
  if (n_sites < 2) throw invalid_argument("second moment needs at least two sites");
  if (total < n_sites) throw infeasible("total particles must be at least the number of sites");
  const double b = 2.0;
  const auto logf = log_factors(total, b);
  const auto row2 = partition_row(n_sites - 2, total, b);
  const auto row1 = log_convolve(row2, logf);
  const auto row0 = log_convolve(row1, logf);
  const double log_norm = row0[static_cast<std::size_t>(total)];
  const auto idx = [](std::int64_t k) { return static_cast<std::size_t>(k); };

  double m2 = 0.0, m4 = 0.0;
  for (std::int64_t m = 1; m <= total - n_sites + 1; ++m) {
    const double p = std::exp(logf[idx(m)] + row1[idx(total - m)] - log_norm);
    const double mm = static_cast<double>(m) * static_cast<double>(m);
    m2 += mm * p;
    m4 += mm * mm * p;
  }
  double cross = 0.0;  // E[m_1^2 m_2^2]
  for (std::int64_t a = 1; a <= total - n_sites + 1; ++a)
    for (std::int64_t c = 1; a + c <= total - n_sites + 2; ++c) {
      const double w = std::exp(logf[idx(a)] + logf[idx(c)] + row2[idx(total - a - c)] - log_norm);
      const double aa = static_cast<double>(a) * static_cast<double>(a);
      const double cc = static_cast<double>(c) * static_cast<double>(c);
      cross += aa * cc * w;
    }
  const double n = static_cast<double>(n_sites);
  const double mt = static_cast<double>(total);
  const double mean_s = n * m2;
  const double mean_s2 = n * m4 + n * (n - 1.0) * cross;
  return {m2 / (mt * mt), mean_s2 / mean_s / (n * mt * mt)};
}

}  // namespace sharekin
