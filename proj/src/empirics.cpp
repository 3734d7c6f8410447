#include "sharekin/empirics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <fstream>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>

#include "sharekin/csv.hpp"
#include "sharekin/error.hpp"

namespace sharekin {

ShareVector SharePanel::column(std::size_t t) const {
  ShareVector out;
  out.label = years.at(t);
  out.shares.reserve(products.size());
  for (const auto& row : shares) out.shares.push_back(row[t]);
  return out;
}

SharePanel SharePanel::slice(int first_year, int last_year) const {
  SharePanel out;
  out.products = products;
  out.provenance = provenance;
  out.shares.assign(products.size(), {});
  for (std::size_t t = 0; t < years.size(); ++t) {
    if (years[t] < first_year || years[t] > last_year) continue;
    out.years.push_back(years[t]);
    for (std::size_t p = 0; p < products.size(); ++p) out.shares[p].push_back(shares[p][t]);
  }
  return out;
}

void SharePanel::validate() const {
  if (years.empty() || products.empty()) throw data_error("empty panel");
  if (!std::is_sorted(years.begin(), years.end())) throw data_error("panel years are not sorted");
  for (std::size_t t = 0; t < years.size(); ++t) {
    double total = 0.0;
    for (const auto& row : shares) {
      if (!(row[t] > 0.0)) throw data_error("non-positive share in year " + std::to_string(years[t]));
      total += row[t];
    }
    if (std::abs(total - 1.0) > 1e-9) throw data_error("shares do not sum to one in year " + std::to_string(years[t]));
  }
}

// ---------------------------------------------------------------------------------------------
// Ingestion

std::vector<TradeFlowRecord> read_trade_flows(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw data_error("empty trade-flow file");
  const auto header = csv::split(csv::trim(line));
  const std::vector<std::string_view> expected = {"year", "exporter", "importer", "sitc4", "value"};
  if (header.size() != expected.size() || !std::equal(header.begin(), header.end(), expected.begin(),
                                                      [](auto a, auto b) { return csv::trim(a) == b; }))
    throw data_error("trade-flow header must be year,exporter,importer,sitc4,value");
  std::vector<TradeFlowRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto fields = csv::split(csv::trim(line));
    if (fields.size() != 5) throw data_error("line " + std::to_string(line_no) + ": expected 5 fields");
    TradeFlowRecord r;
    r.year = csv::parse_number<int>(fields[0], "year");
    r.exporter = std::string(csv::trim(fields[1]));
    r.importer = std::string(csv::trim(fields[2]));
    r.product = std::string(csv::trim(fields[3]));
    r.value = csv::parse_number<double>(fields[4], "value");
    if (!(r.value >= 0.0)) throw data_error("line " + std::to_string(line_no) + ": negative trade value");
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<TradeFlowRecord> read_trade_flows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open " + path);
  return read_trade_flows(in);
}

SharePanel compute_shares(const std::vector<TradeFlowRecord>& records) {
  std::map<int, std::map<std::string, double>> totals;
  std::set<std::string> products;
  for (const auto& r : records) {
    totals[r.year][r.product] += r.value;
    products.insert(r.product);
  }
  SharePanel panel;
  panel.provenance = PanelProvenance::Ingested;
  panel.products.assign(products.begin(), products.end());
  panel.shares.assign(panel.products.size(), {});
  for (const auto& [year, by_product] : totals) {
    double year_total = 0.0;
    for (const auto& [code, v] : by_product) year_total += v;
    if (!(year_total > 0.0)) throw data_error("year " + std::to_string(year) + " has zero total trade");
    panel.years.push_back(year);
    for (std::size_t p = 0; p < panel.products.size(); ++p) {
      const auto it = by_product.find(panel.products[p]);
      panel.shares[p].push_back(it == by_product.end() ? 0.0 : it->second / year_total);
    }
  }
  return panel;
}

FilteredPanel filter_consistent_panel(const SharePanel& panel) {
  FilteredPanel out;
  out.panel.years = panel.years;
  out.panel.provenance = panel.provenance;
  for (std::size_t p = 0; p < panel.products.size(); ++p) {
    const auto& row = panel.shares[p];
    if (std::all_of(row.begin(), row.end(), [](double a) { return a > 0.0; })) {
      out.panel.products.push_back(panel.products[p]);
      out.panel.shares.push_back(row);
    } else {
      out.dropped.push_back(panel.products[p]);
    }
  }
  for (std::size_t t = 0; t < out.panel.years.size(); ++t) {
    double total = 0.0;
    for (const auto& row : out.panel.shares) total += row[t];
    if (total > 0.0)
      for (auto& row : out.panel.shares) row[t] /= total;
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Statistics

std::vector<std::vector<double>> annual_variations(const SharePanel& panel) {
  std::vector<std::vector<double>> out(panel.n_products());
  for (std::size_t p = 0; p < panel.n_products(); ++p)
    for (std::size_t t = 0; t + 1 < panel.n_years(); ++t) out[p].push_back(panel.shares[p][t + 1] - panel.shares[p][t]);
  return out;
}

namespace {

struct LineFit {
  double slope = std::numeric_limits<double>::quiet_NaN();
  double amplitude = std::numeric_limits<double>::quiet_NaN();
};

LineFit fit_bins(const std::vector<ScalingBin>& bins) {
  LineFit fit;
  if (bins.empty()) return fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, log_ratio = 0;
  for (const auto& b : bins) {
    const double x = std::log10(b.share);
    const double y = std::log10(b.mean_change);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    log_ratio += y - x;
  }
  const double n = static_cast<double>(bins.size());
  fit.amplitude = std::pow(10.0, log_ratio / n);
  const double denom = n * sxx - sx * sx;
  if (bins.size() >= 2 && denom > 0.0) fit.slope = (n * sxy - sx * sy) / denom;
  return fit;
}

}  // namespace

ScalingFit fit_fluctuation_scaling(const SharePanel& panel, const ScalingOptions& options) {
  if (panel.n_years() < 2) throw fit_error("fluctuation scaling needs at least two years");
  struct Acc {
    double share = 0.0, change = 0.0;
    std::size_t count = 0;
  };
  std::map<long, Acc> gains, losses;
  const double pd = options.per_decade;
  for (std::size_t p = 0; p < panel.n_products(); ++p) {
    for (std::size_t t = 0; t + 1 < panel.n_years(); ++t) {
      const double a = panel.shares[p][t];
      const double d = panel.shares[p][t + 1] - a;
      if (!(a > options.min_share) || d == 0.0) continue;
      auto& acc = (d > 0.0 ? gains : losses)[static_cast<long>(std::floor(std::log10(a) * pd + 1e-9))];
      acc.share += a;
      acc.change += std::abs(d);
      ++acc.count;
    }
  }
  const auto to_bins = [&](const std::map<long, Acc>& accs) {
    std::vector<ScalingBin> bins;
    for (const auto& [k, acc] : accs)
      if (acc.count >= options.min_bin_count)
        bins.push_back({acc.share / static_cast<double>(acc.count), acc.change / static_cast<double>(acc.count), acc.count});
    return bins;
  };
  ScalingFit fit;
  fit.gains.bins = to_bins(gains);
  fit.losses.bins = to_bins(losses);
  const auto g = fit_bins(fit.gains.bins);
  const auto l = fit_bins(fit.losses.bins);
  fit.gains.c = g.amplitude;
  fit.gains.alpha = g.slope;
  fit.losses.c = l.amplitude;
  fit.losses.alpha = l.slope;

  std::vector<ScalingBin> pooled = fit.gains.bins;
  pooled.insert(pooled.end(), fit.losses.bins.begin(), fit.losses.bins.end());
  if (pooled.size() < 5) throw fit_error("fewer than five occupied bins above the share cutoff");
  const auto all = fit_bins(pooled);
  fit.c = all.amplitude;
  fit.alpha = all.slope;
  const auto [lo, hi] = std::minmax_element(pooled.begin(), pooled.end(),
                                            [](const ScalingBin& a, const ScalingBin& b) { return a.share < b.share; });
  fit.fit_lo = lo->share;
  fit.fit_hi = hi->share;
  return fit;
}

double delta_t_from_c(double c) {
  if (!(c >= 0.0)) throw invalid_argument("fluctuation amplitude must be non-negative");
  return std::numbers::pi * c * c / 4.0;
}

std::string to_string(ExclusionMode mode) {
  return mode == ExclusionMode::PureSubtraction ? "pure-subtraction" : "renormalized";
}

std::map<int, double> second_moment_series(const SharePanel& panel, const std::set<std::string>& exclude,
                                           ExclusionMode mode) {
  std::vector<std::size_t> kept;
  for (std::size_t p = 0; p < panel.n_products(); ++p)
    if (!exclude.contains(panel.products[p])) kept.push_back(p);
  std::map<int, double> out;
  if (kept.empty()) return out;
  for (std::size_t t = 0; t < panel.n_years(); ++t) {
    double total = 0.0, sum_sq = 0.0;
    for (std::size_t p : kept) {
      total += panel.shares[p][t];
      sum_sq += panel.shares[p][t] * panel.shares[p][t];
    }
    if (mode == ExclusionMode::Renormalized) sum_sq /= total * total;
    out[panel.years[t]] = sum_sq / static_cast<double>(kept.size());
  }
  return out;
}

LognormalFit fit_lognormal(const ShareVector& shares) {
  const auto& a = shares.shares;
  if (a.size() < 10) throw fit_error("lognormal fit needs at least 10 products");
  double sum = 0.0;
  for (double v : a) {
    if (!(v > 0.0)) throw fit_error("lognormal fit needs strictly positive shares");
    sum += std::log(v);
  }
  const double n = static_cast<double>(a.size());
  const double mu = sum / n;
  double var = 0.0;
  for (double v : a) var += (std::log(v) - mu) * (std::log(v) - mu);
  return {mu, std::sqrt(var / n), a.size()};
}

DensityCurve density_curve(const EnsembleResult& ensemble) {
  DensityCurve curve;
  curve.rho = ensemble.config.params.density();
  for (const auto& b : ensemble.aggregate) {
    curve.taus.push_back(b.tau);
    curve.second_moment.push_back(b.mean);
  }
  return curve;
}

std::vector<RhoCandidate> fit_density(const std::map<int, double>& empirical, const std::vector<DensityCurve>& curves,
                                      double tolerance) {
  if (empirical.empty()) throw data_error("empty empirical second-moment series");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& [year, v] : empirical) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double panel_length = static_cast<double>(empirical.rbegin()->first - empirical.begin()->first);

  std::vector<RhoCandidate> out;
  for (const auto& curve : curves) {
    RhoCandidate cand;
    cand.rho = curve.rho;
    // First upward crossing of `level` at or after index `from`; interpolated tau.
    const auto crossing = [&](double level, std::size_t from) -> std::optional<std::pair<double, std::size_t>> {
      for (std::size_t k = from; k < curve.taus.size(); ++k) {
        if (curve.second_moment[k] < level) continue;
        if (k == 0) return std::pair{curve.taus[0], k};
        const double y0 = curve.second_moment[k - 1], y1 = curve.second_moment[k];
        const double f = y1 == y0 ? 0.0 : (level - y0) / (y1 - y0);
        return std::pair{curve.taus[k - 1] + f * (curve.taus[k] - curve.taus[k - 1]), k};
      }
      return std::nullopt;
    };
    const auto enter = crossing(lo, 0);
    if (enter) {
      const auto leave = crossing(std::nextafter(hi, std::numeric_limits<double>::infinity()), enter->second);
      if (leave) {
        cand.feasible = true;
        cand.tau_i = enter->first;
        cand.tau_f = leave->first;
        cand.matches_panel = std::abs(cand.width() - panel_length) <= tolerance;
      }
    }
    out.push_back(cand);
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Synthetic panels

std::vector<std::string> synthetic_product_codes(std::size_t n) {
  std::vector<std::string> codes;
  codes.reserve(n);
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t code = 1000 * (p % 9 + 1) + p % 1000;
    char buf[8];
    std::snprintf(buf, sizeof buf, "%04zu", code % 10000);
    codes.emplace_back(buf);
  }
  return codes;
}

SharePanel panel_from_trajectory(const Trajectory& trajectory, const SimConfig& config, int first_year) {
  const auto n = static_cast<std::size_t>(config.params.n_sites);
  const double m = static_cast<double>(config.params.total_particles);
  SharePanel panel;
  panel.provenance = PanelProvenance::Synthetic;
  panel.products = synthetic_product_codes(n);
  panel.shares.assign(n, {});
  for (const auto& sample : trajectory.samples) {
    if (!sample.counts) continue;
    panel.years.push_back(first_year + static_cast<int>(std::lround(sample.tau)));
    for (std::size_t p = 0; p < n; ++p) panel.shares[p].push_back(static_cast<double>((*sample.counts)[p]) / m);
  }
  return panel;
}

SharePanel synthetic_panel(const SimConfig& config, std::int64_t replica, int first_year) {
  SimConfig cfg = config;
  cfg.sample_taus = SimConfig::integer_taus(config.max_tau);
  cfg.snapshot_taus = cfg.sample_taus;
  return panel_from_trajectory(run_replica(cfg, replica), cfg, first_year);
}

// ---------------------------------------------------------------------------------------------
// Panel CSV

void write_panel_csv(std::ostream& out, const SharePanel& panel) {
  out << "year,product,share\n";
  for (std::size_t t = 0; t < panel.n_years(); ++t)
    for (std::size_t p = 0; p < panel.n_products(); ++p)
      out << panel.years[t] << ',' << panel.products[p] << ',' << csv::format(panel.shares[p][t]) << '\n';
}

SharePanel read_panel_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw data_error("empty panel file");
  const auto header = csv::split(csv::trim(line));
  if (header.size() != 3 || csv::trim(header[0]) != "year" || csv::trim(header[1]) != "product" ||
      csv::trim(header[2]) != "share")
    throw data_error("panel header must be year,product,share");
  std::map<int, std::map<std::string, double>> cells;
  std::set<std::string> products;
  while (std::getline(in, line)) {
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split(csv::trim(line));
    if (f.size() != 3) throw data_error("panel rows need 3 fields");
    const int year = csv::parse_number<int>(f[0], "year");
    std::string code(csv::trim(f[1]));
    cells[year][code] = csv::parse_number<double>(f[2], "share");
    products.insert(std::move(code));
  }
  if (cells.empty()) throw data_error("panel has no rows");
  SharePanel panel;
  panel.products.assign(products.begin(), products.end());
  panel.shares.assign(panel.products.size(), {});
  for (const auto& [year, row] : cells) {
    panel.years.push_back(year);
    for (std::size_t p = 0; p < panel.products.size(); ++p) {
      const auto it = row.find(panel.products[p]);
      panel.shares[p].push_back(it == row.end() ? 0.0 : it->second);
    }
  }
  return panel;
}

SharePanel read_panel_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open " + path);
  return read_panel_csv(in);
}

}  // namespace sharekin
