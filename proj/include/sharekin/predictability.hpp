#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sharekin/empirics.hpp"
#include "sharekin/engine.hpp"

namespace sharekin {

/// r_p(t) = log10(A_p(t+1) / A_p(t)), [product][t].
struct GrowthRateMatrix {
  std::vector<std::vector<double>> r;
  std::size_t horizon = 0;  // T = years - 1
};

GrowthRateMatrix growth_rates(const SharePanel& panel);

/// Growth rates closer than this are ties: the same count ratio computed from shares and from counts
/// can differ in the last bit.
inline constexpr double kTieTolerance = 1e-12;

/// Centered rank of `empirical` among `simulated`: rank in [1, N_s + 1] with ties broken uniformly at
/// random, returned as rank / (N_s + 2) - 1/2.
double excess_growth(double empirical, std::span<const double> simulated, Rng& rng);

/// T^-1 sum_i |R_(i) - (i / (T + 1) - 1/2)| over the sorted series.
double unpredictability(std::span<const double> series);

/// (1 - significance) quantile of the unpredictability of T uniforms on (-1/2, 1/2), by seeded Monte
/// Carlo. Parallel over fixed-size chunks; identical to the serial version.
double critical_U(int horizon, double significance, std::int64_t n_mc, std::uint64_t seed = 1);
double critical_U_serial(int horizon, double significance, std::int64_t n_mc, std::uint64_t seed = 1);
/// All n_mc null samples, in chunk order.
std::vector<double> null_unpredictability_samples(int horizon, std::int64_t n_mc, std::uint64_t seed = 1);

inline constexpr double kDefaultForecastDensity = 400.0;
inline constexpr std::int64_t kDefaultForecastRuns = 1000;
inline constexpr std::int64_t kDefaultCriticalSamples = 1000000;

enum class ForecastMode { FreeRunning, Reanchored };
std::string to_string(ForecastMode mode);

struct ForecastOptions {
  double rho = kDefaultForecastDensity;
  std::int64_t runs = kDefaultForecastRuns;  // N_s
  double exponent = 2.0;
  double delta_t_tilde = kDefaultDeltaTTilde;
  ForecastMode mode = ForecastMode::FreeRunning;
  std::uint64_t seed = 1;
};

/// Ensemble config started from the panel's first year with snapshots at every year.
SimConfig forecast_config(const SharePanel& panel, const ForecastOptions& options);

/// Simulated growth rates aligned with the panel's T year-steps. FreeRunning runs one ensemble from
/// the first year; Reanchored restarts every year from that year's empirical shares.
GrowthSamples forecast_growth(const SharePanel& panel, const ForecastOptions& options);

struct ProductScore {
  std::string product;
  std::vector<double> excess;  // R_p(t)
  double unpredictability = 0.0;
  double mean_excess = 0.0;
  double excess_variance = 0.0;
  bool unpredictable = false;
};

struct PrefixRollup {
  std::string prefix;
  int digits = 0;
  double mean_excess = 0.0;
  std::size_t n_predictable = 0;
  std::size_t n_unpredictable = 0;
};

struct ThresholdInfo {
  int horizon = 0;
  double significance = 0.0;
  std::int64_t n_mc = 0;
  double critical = 0.0;
  std::uint64_t seed = 0;
};

struct PredictabilityReport {
  std::vector<ProductScore> products;
  std::vector<PrefixRollup> rollups;  // 1-digit prefixes first, then 2-digit, each sorted
  ThresholdInfo threshold;
  std::size_t n_sims = 0;

  double unpredictable_fraction() const;
};

struct ReportOptions {
  double significance = 0.05;
  std::int64_t n_mc = kDefaultCriticalSamples;
  std::uint64_t seed = 1;
};

/// Scores every product against the simulated growth rates (parallel over products).
PredictabilityReport build_report(const SharePanel& panel, const GrowthSamples& simulated,
                                  const ReportOptions& options = {});
PredictabilityReport build_report_serial(const SharePanel& panel, const GrowthSamples& simulated,
                                         const ReportOptions& options = {});
/// Convenience overload taking an ensemble with yearly snapshots.
PredictabilityReport build_report(const SharePanel& panel, const EnsembleResult& ensemble,
                                  const ReportOptions& options = {});

std::vector<PrefixRollup> prefix_rollups(const std::vector<ProductScore>& products);

void write_report_csv(std::ostream& out, const PredictabilityReport& report);
void write_rollup_csv(std::ostream& out, const PredictabilityReport& report);
void write_threshold_json(std::ostream& out, const ThresholdInfo& threshold);

}  // namespace sharekin
