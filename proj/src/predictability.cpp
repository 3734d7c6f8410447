#include "sharekin/predictability.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <ostream>

#include <json.hpp>

#include "sharekin/csv.hpp"
#include "sharekin/error.hpp"

namespace sharekin {

GrowthRateMatrix growth_rates(const SharePanel& panel) {
  if (panel.n_years() < 2) throw invalid_argument("growth rates need at least two years");
  GrowthRateMatrix out;
  out.horizon = panel.n_years() - 1;
  out.r.resize(panel.n_products());
  for (std::size_t p = 0; p < panel.n_products(); ++p) {
    const auto& row = panel.shares[p];
    for (std::size_t t = 0; t < out.horizon; ++t) {
      if (!(row[t] > 0.0) || !(row[t + 1] > 0.0))
        throw data_error("non-positive share for product " + panel.products[p]);
      out.r[p].push_back(std::log10(row[t + 1] / row[t]));
    }
  }
  return out;
}

double excess_growth(double empirical, std::span<const double> simulated, Rng& rng) {
  if (simulated.empty()) throw invalid_argument("excess growth needs at least one simulated value");
  std::uint64_t below = 0, ties = 0;
  for (double v : simulated) {
    if (std::abs(v - empirical) <= kTieTolerance)
      ++ties;
    else
      below += v < empirical;
  }
  const std::uint64_t rank = below + 1 + (ties > 0 ? rng.below(ties + 1) : 0);
  return static_cast<double>(rank) / static_cast<double>(simulated.size() + 2) - 0.5;
}

double unpredictability(std::span<const double> series) {
  if (series.empty()) return 0.0;
  std::vector<double> sorted(series.begin(), series.end());
  std::sort(sorted.begin(), sorted.end());
  const double t = static_cast<double>(sorted.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i)
    sum += std::abs(sorted[i] - (static_cast<double>(i + 1) / (t + 1.0) - 0.5));
  return sum / t;
}

namespace {

constexpr std::int64_t kChunk = 8192;

void check_critical_args(int horizon, double significance, std::int64_t n_mc) {
  if (horizon < 1) throw invalid_argument("horizon must be at least 1");
  if (!(significance > 0.0 && significance < 1.0)) throw invalid_argument("significance must lie in (0, 1)");
  if (n_mc < 1) throw invalid_argument("n_mc must be positive");
}

void fill_chunk(int horizon, std::uint64_t seed, std::int64_t chunk, std::int64_t n_mc, std::vector<double>& out) {
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(chunk)));
  std::vector<double> series(static_cast<std::size_t>(horizon));
  const std::int64_t end = std::min(n_mc, (chunk + 1) * kChunk);
  for (std::int64_t k = chunk * kChunk; k < end; ++k) {
    for (auto& r : series) r = rng.uniform() - 0.5;
    out[static_cast<std::size_t>(k)] = unpredictability(series);
  }
}

// Linear interpolation between order statistics (type 7).
double quantile(std::vector<double> values, double q) {
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto k = static_cast<std::size_t>(std::floor(pos));
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
  const double lo = values[k];
  if (k + 1 >= values.size()) return lo;
  const double hi = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(k) + 1, values.end());
  return lo + (pos - static_cast<double>(k)) * (hi - lo);
}

}  // namespace

std::vector<double> null_unpredictability_samples(int horizon, std::int64_t n_mc, std::uint64_t seed) {
  check_critical_args(horizon, 0.5, n_mc);
  std::vector<double> out(static_cast<std::size_t>(n_mc));
  const std::int64_t chunks = (n_mc + kChunk - 1) / kChunk;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t c = 0; c < chunks; ++c) fill_chunk(horizon, seed, c, n_mc, out);
  return out;
}

double critical_U(int horizon, double significance, std::int64_t n_mc, std::uint64_t seed) {
  check_critical_args(horizon, significance, n_mc);
  return quantile(null_unpredictability_samples(horizon, n_mc, seed), 1.0 - significance);
}

double critical_U_serial(int horizon, double significance, std::int64_t n_mc, std::uint64_t seed) {
  check_critical_args(horizon, significance, n_mc);
  std::vector<double> out(static_cast<std::size_t>(n_mc));
  const std::int64_t chunks = (n_mc + kChunk - 1) / kChunk;
  for (std::int64_t c = 0; c < chunks; ++c) fill_chunk(horizon, seed, c, n_mc, out);
  return quantile(std::move(out), 1.0 - significance);
}

std::string to_string(ForecastMode mode) { return mode == ForecastMode::FreeRunning ? "free-running" : "reanchored"; }

SimConfig forecast_config(const SharePanel& panel, const ForecastOptions& options) {
  if (panel.n_years() < 2) throw invalid_argument("forecast needs at least two panel years");
  if (!(options.rho >= 1.0)) throw invalid_argument("forecast density must be at least 1");
  if (options.runs < 1) throw invalid_argument("forecast needs at least one run");
  const auto n = static_cast<std::int64_t>(panel.n_products());
  SimConfig cfg;
  cfg.params = ModelParams(n, std::llround(options.rho * static_cast<double>(n)), options.exponent);
  cfg.init_shares = panel.column(0);
  cfg.delta_t_tilde = options.delta_t_tilde;
  cfg.max_tau = static_cast<double>(panel.n_years() - 1);
  cfg.sample_taus = SimConfig::integer_taus(cfg.max_tau);
  cfg.snapshot_taus = cfg.sample_taus;
  cfg.replicas = options.runs;
  cfg.base_seed = options.seed;
  return cfg;
}

GrowthSamples forecast_growth(const SharePanel& panel, const ForecastOptions& options) {
  const SimConfig base = forecast_config(panel, options);
  if (options.mode == ForecastMode::FreeRunning) return simulated_growth_rates(run_ensemble(base));

  const std::size_t steps = panel.n_years() - 1;
  GrowthSamples out(steps, panel.n_products(), static_cast<std::size_t>(options.runs));
  for (std::size_t t = 0; t < steps; ++t) {
    SimConfig cfg = base;
    cfg.init_shares = panel.column(t);
    cfg.max_tau = 1.0;
    cfg.sample_taus = {0.0, 1.0};
    cfg.snapshot_taus = cfg.sample_taus;
    cfg.base_seed = derive_seed(options.seed, t);
    const auto one = simulated_growth_rates(run_ensemble(cfg));
    for (std::size_t p = 0; p < out.products(); ++p)
      for (std::size_t i = 0; i < out.replicas(); ++i) out.at(t, p, i) = one.at(0, p, i);
  }
  return out;
}

double PredictabilityReport::unpredictable_fraction() const {
  if (products.empty()) return 0.0;
  const auto n = std::count_if(products.begin(), products.end(), [](const ProductScore& s) { return s.unpredictable; });
  return static_cast<double>(n) / static_cast<double>(products.size());
}

std::vector<PrefixRollup> prefix_rollups(const std::vector<ProductScore>& products) {
  struct Acc {
    double sum = 0.0;
    std::size_t pred = 0, unpred = 0;
  };
  std::vector<PrefixRollup> out;
  for (int digits : {1, 2}) {
    std::map<std::string, Acc> groups;
    for (const auto& s : products) {
      auto& acc = groups[s.product.substr(0, static_cast<std::size_t>(digits))];
      acc.sum += s.mean_excess;
      (s.unpredictable ? acc.unpred : acc.pred) += 1;
    }
    for (const auto& [prefix, acc] : groups)
      out.push_back({prefix, digits, acc.sum / static_cast<double>(acc.pred + acc.unpred), acc.pred, acc.unpred});
  }
  return out;
}

namespace {

ProductScore score_product(const SharePanel& panel, const GrowthRateMatrix& growth, const GrowthSamples& simulated,
                           std::size_t p, const ReportOptions& options) {
  ProductScore s;
  s.product = panel.products[p];
  Rng rng(derive_seed(options.seed ^ 0x5eedc0de5eedc0deULL, p));
  for (std::size_t t = 0; t < growth.horizon; ++t)
    s.excess.push_back(excess_growth(growth.r[p][t], simulated.ensemble(t, p), rng));
  const double n = static_cast<double>(s.excess.size());
  for (double r : s.excess) s.mean_excess += r;
  s.mean_excess /= n;
  for (double r : s.excess) s.excess_variance += (r - s.mean_excess) * (r - s.mean_excess);
  s.excess_variance /= n;
  s.unpredictability = unpredictability(s.excess);
  return s;
}

struct Prepared {
  GrowthRateMatrix growth;
  ThresholdInfo threshold;
};

Prepared prepare(const SharePanel& panel, const GrowthSamples& simulated, const ReportOptions& options) {
  Prepared out;
  out.growth = growth_rates(panel);
  if (simulated.products() != panel.n_products())
    throw invalid_argument("simulated ensemble has " + std::to_string(simulated.products()) + " sites, panel has " +
                           std::to_string(panel.n_products()) + " products");
  if (simulated.steps() != out.growth.horizon)
    throw invalid_argument("simulated horizon " + std::to_string(simulated.steps()) + " does not match panel horizon " +
                           std::to_string(out.growth.horizon));
  if (simulated.replicas() < 1) throw invalid_argument("empty simulated ensemble");
  const int horizon = static_cast<int>(out.growth.horizon);
  out.threshold = {horizon, options.significance, options.n_mc,
                   critical_U(horizon, options.significance, options.n_mc, options.seed), options.seed};
  return out;
}

PredictabilityReport finish(std::vector<ProductScore> scores, const Prepared& prep, std::size_t n_sims) {
  PredictabilityReport report;
  for (auto& s : scores) s.unpredictable = s.unpredictability > prep.threshold.critical;
  report.products = std::move(scores);
  report.rollups = prefix_rollups(report.products);
  report.threshold = prep.threshold;
  report.n_sims = n_sims;
  return report;
}

}  // namespace

PredictabilityReport build_report(const SharePanel& panel, const GrowthSamples& simulated,
                                  const ReportOptions& options) {
  const auto prep = prepare(panel, simulated, options);
  std::vector<ProductScore> scores(panel.n_products());
  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < scores.size(); ++p) {
    try {
      scores[p] = score_product(panel, prep.growth, simulated, p, options);
    } catch (...) {
#pragma omp critical(sharekin_report_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return finish(std::move(scores), prep, simulated.replicas());
}

PredictabilityReport build_report_serial(const SharePanel& panel, const GrowthSamples& simulated,
                                         const ReportOptions& options) {
  const auto prep = prepare(panel, simulated, options);
  std::vector<ProductScore> scores;
  for (std::size_t p = 0; p < panel.n_products(); ++p)
    scores.push_back(score_product(panel, prep.growth, simulated, p, options));
  return finish(std::move(scores), prep, simulated.replicas());
}

PredictabilityReport build_report(const SharePanel& panel, const EnsembleResult& ensemble,
                                  const ReportOptions& options) {
  return build_report(panel, simulated_growth_rates(ensemble), options);
}

void write_report_csv(std::ostream& out, const PredictabilityReport& report) {
  out << "product,U,mean_excess,excess_var,class\n";
  for (const auto& s : report.products)
    out << s.product << ',' << csv::format(s.unpredictability) << ',' << csv::format(s.mean_excess) << ','
        << csv::format(s.excess_variance) << ',' << (s.unpredictable ? "unpredictable" : "predictable") << '\n';
}

void write_rollup_csv(std::ostream& out, const PredictabilityReport& report) {
  out << "prefix,digits,mean_excess,n_predictable,n_unpredictable\n";
  for (const auto& r : report.rollups)
    out << r.prefix << ',' << r.digits << ',' << csv::format(r.mean_excess) << ',' << r.n_predictable << ','
        << r.n_unpredictable << '\n';
}

void write_threshold_json(std::ostream& out, const ThresholdInfo& threshold) {
  nlohmann::ordered_json j;
  j["T"] = threshold.horizon;
  j["significance"] = threshold.significance;
  j["n_mc"] = threshold.n_mc;
  j["U_crit"] = threshold.critical;
  j["seed"] = threshold.seed;
  out << j.dump(2) << '\n';
}

}  // namespace sharekin
