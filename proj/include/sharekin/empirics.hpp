#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sharekin/engine.hpp"
#include "sharekin/model.hpp"

namespace sharekin {

struct TradeFlowRecord {
  int year = 0;
  std::string exporter;
  std::string importer;
  std::string product;  // 4-digit SITC-like code
  double value = 0.0;
};

enum class PanelProvenance { Ingested, Synthetic };

/// Share matrix A_p(t): products x years.
struct SharePanel {
  std::vector<int> years;
  std::vector<std::string> products;
  std::vector<std::vector<double>> shares;  // shares[p][t]
  PanelProvenance provenance = PanelProvenance::Ingested;

  std::size_t n_products() const { return products.size(); }
  std::size_t n_years() const { return years.size(); }
  ShareVector column(std::size_t t) const;
  /// Years in [first_year, last_year].
  SharePanel slice(int first_year, int last_year) const;
  /// Throws data_error unless every column sums to 1 within 1e-9 and all entries are positive.
  void validate() const;
};

/// Reads `year,exporter,importer,sitc4,value`.
std::vector<TradeFlowRecord> read_trade_flows(std::istream& in);
std::vector<TradeFlowRecord> read_trade_flows(const std::string& path);

/// A_p(t) = sum_{c,c'} V / sum_{c,c',p'} V. Products missing in a year get share 0.
SharePanel compute_shares(const std::vector<TradeFlowRecord>& records);

struct FilteredPanel {
  SharePanel panel;
  std::vector<std::string> dropped;
};

/// Keeps products with a strictly positive share every year and renormalizes the columns.
FilteredPanel filter_consistent_panel(const SharePanel& panel);

/// dA_p(t) = A_p(t+1) - A_p(t), [product][t] with t < years - 1.
std::vector<std::vector<double>> annual_variations(const SharePanel& panel);

struct ScalingBin {
  double share = 0.0;      // mean A in the bin
  double mean_change = 0.0;  // mean |dA| in the bin
  std::size_t count = 0;
};

struct SignFit {
  double c = 0.0;
  double alpha = 0.0;
  std::vector<ScalingBin> bins;  // bins used in the fit
};

struct ScalingOptions {
  double min_share = 1e-5;
  int per_decade = 10;
  std::size_t min_bin_count = 1;
};

struct ScalingFit {
  double c = 0.0;      // amplitude of |dA| = c A, geometric mean of |dA|/A over the fitted bins
  double alpha = 0.0;  // least-squares slope of log |dA| against log A
  SignFit gains;
  SignFit losses;
  double fit_lo = 0.0;
  double fit_hi = 0.0;
};

/// Log-binned <|dA|> against A, conditioned on the sign of dA (zero changes are skipped), fitted in
/// log-log over A > min_share. Needs at least five occupied bins in the pooled fit.
ScalingFit fit_fluctuation_scaling(const SharePanel& panel, const ScalingOptions& options = {});

/// Model time per year from the fluctuation amplitude: pi c^2 / 4.
double delta_t_from_c(double c);

enum class ExclusionMode { PureSubtraction, Renormalized };
std::string to_string(ExclusionMode mode);

/// N^-1 sum_p A_p(t)^2 per year. Excluded products are removed first; in Renormalized mode the
/// remaining shares are rescaled to sum to one.
std::map<int, double> second_moment_series(const SharePanel& panel, const std::set<std::string>& exclude = {},
                                           ExclusionMode mode = ExclusionMode::PureSubtraction);

struct LognormalFit {
  double mu_ln = 0.0;
  double sigma_ln = 0.0;
  std::size_t n = 0;
};

/// Maximum-likelihood mean and standard deviation of log A.
LognormalFit fit_lognormal(const ShareVector& shares);

struct DensityCurve {
  double rho = 0.0;
  std::vector<double> taus;
  std::vector<double> second_moment;  // ensemble mean
};

DensityCurve density_curve(const EnsembleResult& ensemble);

struct RhoCandidate {
  double rho = 0.0;
  bool feasible = false;
  double tau_i = 0.0;  // curve enters [min, max] of the empirical series
  double tau_f = 0.0;  // curve leaves it
  double width() const { return tau_f - tau_i; }
  bool matches_panel = false;
};

struct CalibrationResult {
  double c = 0.0;
  double alpha = 0.0;
  double delta_t_tilde = 0.0;
  std::vector<RhoCandidate> rho_candidates;
  std::map<int, double> second_moment_series;
};

/// For each curve, where its mean <A^2> enters and leaves the empirical range (linear interpolation
/// between samples). A candidate matches when |width - panel years| <= tolerance.
std::vector<RhoCandidate> fit_density(const std::map<int, double>& empirical, const std::vector<DensityCurve>& curves,
                                      double tolerance = 10.0);

/// Runs one replica with snapshots at every integer tau in [0, max_tau] and returns its shares.
/// Years are first_year + tau; product codes are synthetic 4-digit codes.
SharePanel synthetic_panel(const SimConfig& config, std::int64_t replica = 0, int first_year = 0);
SharePanel panel_from_trajectory(const Trajectory& trajectory, const SimConfig& config, int first_year = 0);
std::vector<std::string> synthetic_product_codes(std::size_t n);

/// Long form `year,product,share`.
void write_panel_csv(std::ostream& out, const SharePanel& panel);
SharePanel read_panel_csv(std::istream& in);
SharePanel read_panel_csv(const std::string& path);

}  // namespace sharekin
