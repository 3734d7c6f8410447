#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sharekin/model.hpp"

namespace sharekin {

/// Single-site weight f_b(m) = m^-b / zeta(b). For b <= 1 zeta(b) does not normalize the weights,
/// so the unnormalized m^-b is used; single-site distributions do not depend on the constant.
double log_site_factor(std::int64_t m, double b);

/// log Z_{n,m} for 0 <= n <= N and 0 <= m <= M (-inf where m < n, Z_{0,0} = 1).
class PartitionTable {
 public:
  PartitionTable(std::int64_t n_sites, std::int64_t total, double b);

  double log_z(std::int64_t n, std::int64_t m) const { return rows_[static_cast<std::size_t>(n)][static_cast<std::size_t>(m)]; }
  const std::vector<double>& row(std::int64_t n) const { return rows_[static_cast<std::size_t>(n)]; }
  std::vector<double>& row(std::int64_t n) { return rows_[static_cast<std::size_t>(n)]; }
  std::int64_t n_sites() const { return n_sites_; }
  std::int64_t total() const { return total_; }
  double exponent() const { return b_; }

 private:
  std::int64_t n_sites_;
  std::int64_t total_;
  double b_;
  std::vector<std::vector<double>> rows_;
};

/// Z_{n,m} = sum_{k=1}^{m-n+1} f_b(k) Z_{n-1,m-k}, in log domain. Each row is filled in parallel.
PartitionTable partition_dp(std::int64_t n_sites, std::int64_t total, double b);
PartitionTable partition_dp_serial(std::int64_t n_sites, std::int64_t total, double b);

enum class Provenance { ExactDp, ExactCtmc, Asymptotic, Simulated };
std::string to_string(Provenance p);

struct StationaryProfile {
  std::int64_t n_sites = 0;
  std::int64_t total = 0;
  double exponent = 2.0;
  Provenance provenance = Provenance::ExactDp;
  std::vector<double> p;  // p[k] = p_inf(m = k + 1), m = 1 .. M - N + 1

  double density() const { return static_cast<double>(total) / static_cast<double>(n_sites); }
  double at(std::int64_t m) const { return p[static_cast<std::size_t>(m - 1)]; }
  double mass() const;
  double mean() const;
  double moment(int k) const;
};

/// p_inf(m) = f_b(m) Z_{N-1,M-m} / Z_{N,M}.
StationaryProfile exact_site_distribution(std::int64_t n_sites, std::int64_t total, double b);
StationaryProfile exact_site_distribution(const PartitionTable& table);

struct CtmcSolution {
  std::vector<std::vector<Count>> states;  // all compositions of M into N positive parts
  std::vector<double> probability;         // stationary probability per state
  StationaryProfile marginal;              // single-site marginal (averaged over sites)

  std::size_t index_of(const std::vector<Count>& state) const;
};

inline constexpr std::int64_t kCtmcStateLimit = 200000;

/// Number of compositions C(M-1, N-1), saturating at INT64_MAX.
std::int64_t composition_count(std::int64_t n_sites, std::int64_t total);
/// Every composition of `total` into `n_sites` positive parts, in lexicographic order.
std::vector<std::vector<Count>> enumerate_compositions(std::int64_t n_sites, std::int64_t total);

/// Stationary vector of the full generator with the exact rates (m_p m_q)^b / S({m}).
CtmcSolution solve_ctmc(std::int64_t n_sites, std::int64_t total, double b);
StationaryProfile exact_ctmc_stationary(std::int64_t n_sites, std::int64_t total, double b);

/// zeta(b-1)/zeta(b) for b > 2; (1/zeta(2)) log(N/zeta(2)) for b = 2 with finite N.
double critical_density(double b, std::optional<std::int64_t> n_sites = std::nullopt);

/// mu = exp(-rho zeta(2)), the b = 2 fluid decay rate.
double chemical_potential(double rho);

enum class Regime { Fluid, Condensate };
std::string to_string(Regime r);

struct AsymptoticProfile {
  StationaryProfile profile;  // numerically normalized
  Regime regime = Regime::Fluid;
  double mu = 0.0;
  double rho_c = 0.0;
  double bump_center = 0.0;  // M - M_c + x0 N / zeta(2), x0 = -log 2
  double normalization = 1.0;  // sum of the raw asymptotic form before renormalizing
};

/// (1/(zeta(2) m^2)) exp(-(N mu/zeta(2)) (e^{m zeta(2)/N} - 1)).
double fluid_form(std::int64_t m, std::int64_t n_sites, double rho);
/// (1/(zeta(2) m^2)) e^{m zeta(2)/N} phi(N mu e^{m zeta(2)/N}/zeta(2)) / phi(N mu/zeta(2)).
double closed_form(std::int64_t m, std::int64_t n_sites, double rho);
/// (1/(zeta(2) m^2)) [log(zeta(2)/(N mu))]^2 (1/sqrt(2 pi)) e^{x/2 - e^x}.
double condensate_form(std::int64_t m, std::int64_t n_sites, double rho);
/// Peak height of the bump in the y variable: zeta(2) / (N^2 2 sqrt(pi e)).
double bump_height(std::int64_t n_sites);
/// Center of the pseudo-condensate bump.
double bump_center(std::int64_t n_sites, double rho);

/// b = 2 asymptotics: the fluid form for rho <= rho_c, otherwise the closed form (power-law bulk plus
/// condensate bump). Always renormalized over m = 1 .. M - N + 1.
AsymptoticProfile asymptotic_site_distribution(std::int64_t n_sites, double rho);

struct PhasePoint {
  double exponent = 2.0;
  double density = 1.0;
  std::optional<std::int64_t> n_sites;
};

/// Condensate iff rho exceeds the critical density (b > 2, or b = 2 at finite N).
Regime classify_phase(const PhasePoint& point);

struct CollapsePoint {
  double x = 0.0;
  double y = 0.0;
};

struct CollapsedCurves {
  std::vector<std::vector<CollapsePoint>> fluid;      // per profile: (zeta m/N, [m^2 zeta p]^{zeta/(N mu)})
  std::vector<std::vector<CollapsePoint>> condensate; // per profile: (zeta m/N - log(zeta/(N mu)), m^2 zeta p / log^2(...))
};

/// Reference curves y = e^{1 - e^x} and y = e^{x/2 - e^x}/sqrt(2 pi).
double fluid_collapse_curve(double x);
double condensate_collapse_curve(double x);

/// Rescales b = 2 profiles sharing a density. Zero-probability points are skipped.
CollapsedCurves scaling_collapse(const std::vector<StationaryProfile>& profiles, double rho);

/// <A^2> = N^-1 sum A_p^2 in the stationary state, b = 2.
struct StationarySecondMoment {
  double factorized = 0.0;  // under prod f_2(m_i) / Z_{N,M}
  double dynamics = 0.0;    // under S({m}) prod f_2(m_i), the exact stationary measure of the hop rates
};
StationarySecondMoment stationary_second_moment(std::int64_t n_sites, std::int64_t total);

/// Log-domain convolution power: row n of the partition table (entries 0..M), O(M^2 log n).
std::vector<double> partition_row(std::int64_t n, std::int64_t total, double b);

}  // namespace sharekin
