#include "sharekin/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sharekin/error.hpp"

namespace sharekin {

ModelParams::ModelParams(std::int64_t n, std::int64_t m, double b) : n_sites(n), total_particles(m), exponent(b) {
  if (n < 2) throw invalid_argument("model needs at least two sites");
  if (m < n) throw infeasible("total particles must be at least the number of sites");
  if (!(b >= 0.0) || !std::isfinite(b)) throw invalid_argument("exponent must be a non-negative finite number");
}

ModelParams ModelParams::from_density(std::int64_t n, std::int64_t rho, double b) { return {n, n * rho, b}; }

double site_weight(Count m, double b) {
  if (b == 0.0) return 1.0;
  const double x = static_cast<double>(m);
  if (b == 1.0) return x;
  if (b == 2.0) return x * x;
  if (b == 3.0) return x * x * x;
  return std::pow(x, b);
}

double log_site_weight(Count m, double b) { return b * std::log(static_cast<double>(m)); }

namespace {

// Above this log-weight, weights are stored as exp(b log m - scale) instead of m^b.
constexpr double kLogWeightCeiling = 300.0;

}  // namespace

Configuration::Configuration(std::vector<Count> counts, double b) : counts_(std::move(counts)), exponent_(b) {
  if (counts_.size() < 2) throw invalid_argument("configuration needs at least two sites");
  total_ = 0;
  for (Count c : counts_) {
    if (c < 1) throw invalid_argument("every site must hold at least one particle");
    total_ += c;
  }
  const double max_log = log_site_weight(*std::max_element(counts_.begin(), counts_.end()), b);
  const double total_log = log_site_weight(static_cast<Count>(std::min<std::int64_t>(total_, INT32_MAX)), b);
  log_scale_ = std::max(max_log, total_log) > kLogWeightCeiling ? total_log - kLogWeightCeiling : 0.0;
  refresh_weight_sum();
}

Configuration Configuration::uniform(const ModelParams& params) {
  const auto n = static_cast<std::size_t>(params.n_sites);
  std::vector<Count> counts(n, static_cast<Count>(params.total_particles / params.n_sites));
  const auto extra = static_cast<std::size_t>(params.total_particles % params.n_sites);
  for (std::size_t i = 0; i < extra; ++i) ++counts[i];
  return {std::move(counts), params.exponent};
}

double Configuration::weight(Count m) const {
  if (log_scale_ == 0.0) return site_weight(m, exponent_);
  return std::exp(log_site_weight(m, exponent_) - log_scale_);
}

void Configuration::move_particle(std::size_t source, std::size_t dest) {
  const Count ms = counts_[source];
  const Count md = counts_[dest];
  weight_sum_ += (weight(ms - 1) - weight(ms)) + (weight(md + 1) - weight(md));
  counts_[source] = ms - 1;
  counts_[dest] = md + 1;
}

double Configuration::refresh_weight_sum() {
  double s = 0.0;
  for (Count c : counts_) s += weight(c);
  const double drift = weight_sum_ == 0.0 ? 0.0 : std::abs(weight_sum_ - s) / s;
  weight_sum_ = s;
  return drift;
}

double transfer_rate(const Configuration& cfg, std::size_t source, std::size_t dest) {
  if (source >= cfg.size() || dest >= cfg.size()) throw invalid_argument("site index out of range");
  if (source == dest) throw invalid_argument("source and destination must differ");
  if (cfg[source] < 2) return 0.0;
  if (cfg.log_scale() == 0.0) return cfg.weight(cfg[source]) * cfg.weight(cfg[dest]) / cfg.scaled_weight_sum();
  const double b = cfg.exponent();
  return std::exp(log_site_weight(cfg[source], b) + log_site_weight(cfg[dest], b) -
                  (std::log(cfg.scaled_weight_sum()) + cfg.log_scale()));
}

double total_exit_rate(const Configuration& cfg) {
  const double s = cfg.scaled_weight_sum();
  double total = 0.0;
  for (Count c : cfg.counts()) {
    if (c < 2) continue;
    const double w = cfg.weight(c);
    if (w > 0.0) total += std::exp(std::log(w) + std::log1p(-w / s) + cfg.log_scale());
  }
  return total;
}

Configuration discretize_shares(const ShareVector& shares, std::int64_t total_particles, double b) {
  const std::size_t n = shares.shares.size();
  if (static_cast<std::int64_t>(n) > total_particles) throw infeasible("fewer particles than products");
  const double sum = std::accumulate(shares.shares.begin(), shares.shares.end(), 0.0);
  if (!(sum > 0.0)) throw invalid_argument("shares must have a positive sum");

  std::vector<Count> counts(n);
  std::vector<double> remainder(n);
  std::int64_t assigned = 0;
  for (std::size_t p = 0; p < n; ++p) {
    const double raw = shares.shares[p] / sum * static_cast<double>(total_particles);
    const double whole = std::floor(raw);
    counts[p] = static_cast<Count>(whole);
    remainder[p] = raw - whole;
    assigned += counts[p];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) { return remainder[a] > remainder[c]; });
  for (std::int64_t k = 0; assigned < total_particles; ++k, ++assigned) ++counts[order[static_cast<std::size_t>(k) % n]];
  while (assigned > total_particles) {  // rounding noise when the shares do not sum exactly
    auto it = std::max_element(counts.begin(), counts.end());
    --*it;
    --assigned;
  }

  // Floor repair: every empty site takes one particle from the current largest site.
  for (std::size_t p = 0; p < n; ++p) {
    if (counts[p] >= 1) continue;
    auto donor = std::max_element(counts.begin(), counts.end());
    --*donor;
    counts[p] = 1;
  }
  return {std::move(counts), b};
}

ShareVector shares_of(const Configuration& cfg) {
  ShareVector out;
  out.shares.reserve(cfg.size());
  const double m = static_cast<double>(cfg.total());
  for (Count c : cfg.counts()) out.shares.push_back(static_cast<double>(c) / m);
  return out;
}

}  // namespace sharekin
