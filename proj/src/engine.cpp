#include "sharekin/engine.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "sharekin/error.hpp"

namespace sharekin {

std::uint64_t Rng::below(std::uint64_t n) {
  // Rejection on the top of the range keeps the draw exactly uniform.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = gen_();
  while (x >= limit) x = gen_();
  return x % n;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t replica_id) {
  return splitmix64(base_seed ^ splitmix64(replica_id));
}

Engine::Engine(Configuration cfg, std::uint64_t seed) : cfg_(std::move(cfg)), rng_(seed) {
  time_unit_ = std::exp(-cfg_.log_scale());
  refresh();
  emitters_ = std::count_if(cfg_.counts().begin(), cfg_.counts().end(), [](Count c) { return c >= 2; });
  schedule_next();
}

Event Engine::step() {
  if (frozen()) return {};
  auto ignore = [](double, std::size_t, std::size_t, const Configuration&) {};
  return propose(ignore);
}

void Engine::schedule_next() {
  if (frozen()) {
    next_time_ = std::numeric_limits<double>::infinity();
    return;
  }
  next_time_ = now_ + rng_.exponential() / index_.total() * time_unit_;
}

void Engine::refresh() {
  cfg_.refresh_weight_sum();
  std::vector<double> weights(cfg_.size());
  for (std::size_t i = 0; i < cfg_.size(); ++i) weights[i] = cfg_.weight(cfg_[i]);
  index_.rebuild(weights);
  since_refresh_ = 0;
}

// ---------------------------------------------------------------------------------------------

namespace {

bool contains_tau(const std::vector<double>& taus, double tau) {
  return std::any_of(taus.begin(), taus.end(), [tau](double t) { return std::abs(t - tau) < 1e-9; });
}

}  // namespace

void SimConfig::validate() const {
  if (params.n_sites < 2) throw invalid_argument("n_sites must be at least 2");
  if (params.total_particles < params.n_sites) throw infeasible("total_particles must be at least n_sites");
  if (!(delta_t_tilde > 0.0)) throw invalid_argument("delta_t_tilde must be positive");
  if (!(max_tau >= 0.0)) throw invalid_argument("max_tau must be non-negative");
  if (replicas < 1) throw invalid_argument("replicas must be at least 1");
  if (!std::is_sorted(sample_taus.begin(), sample_taus.end())) throw invalid_argument("sample_taus must be sorted");
  for (double t : sample_taus)
    if (t < 0.0 || t > max_tau + 1e-9) throw invalid_argument("sample_taus must lie in [0, max_tau]");
  for (double t : snapshot_taus)
    if (!contains_tau(sample_taus, t)) throw invalid_argument("snapshot_taus must be a subset of sample_taus");
  if (init_shares && static_cast<std::int64_t>(init_shares->shares.size()) != params.n_sites)
    throw invalid_argument("initial shares do not match n_sites");
}

Configuration SimConfig::initial_configuration() const {
  if (init_shares) return discretize_shares(*init_shares, params.total_particles, params.exponent);
  return Configuration::uniform(params);
}

std::vector<double> SimConfig::integer_taus(double max_tau) {
  std::vector<double> taus;
  for (double t = 0.0; t <= max_tau + 1e-9; t += 1.0) taus.push_back(t);
  return taus;
}

std::optional<std::size_t> EnsembleResult::sample_index(double tau) const {
  for (std::size_t i = 0; i < config.sample_taus.size(); ++i)
    if (std::abs(config.sample_taus[i] - tau) < 1e-9) return i;
  return std::nullopt;
}

double second_moment(const Configuration& cfg) {
  double sum_sq = 0.0;
  for (Count c : cfg.counts()) sum_sq += static_cast<double>(c) * static_cast<double>(c);
  const double m = static_cast<double>(cfg.total());
  return sum_sq / (static_cast<double>(cfg.size()) * m * m);
}

Trajectory run_replica(const SimConfig& config, std::int64_t replica_id) {
  config.validate();
  Engine engine(config.initial_configuration(), derive_seed(config.base_seed, static_cast<std::uint64_t>(replica_id)));
  Trajectory out;
  out.replica = replica_id;
  out.samples.reserve(config.sample_taus.size());
  for (double tau : config.sample_taus) {
    engine.advance_to(tau * config.delta_t_tilde);
    TrajectorySample sample{tau, second_moment(engine.configuration()), std::nullopt};
    if (contains_tau(config.snapshot_taus, tau)) {
      const auto counts = engine.configuration().counts();
      sample.counts.emplace(counts.begin(), counts.end());
    }
    out.samples.push_back(std::move(sample));
  }
  engine.advance_to(config.max_tau * config.delta_t_tilde);
  out.proposals = engine.proposals();
  out.accepted = engine.accepted();
  return out;
}

std::vector<BandPoint> aggregate_replicas(const std::vector<Trajectory>& replicas) {
  std::vector<BandPoint> out;
  if (replicas.empty()) return out;
  const std::size_t n_samples = replicas.front().samples.size();
  const std::size_t r = replicas.size();
  std::vector<double> values(r);
  for (std::size_t k = 0; k < n_samples; ++k) {
    double sum = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
      values[i] = replicas[i].samples[k].second_moment;
      sum += values[i];
    }
    std::sort(values.begin(), values.end());
    const auto rank = [&](double q) { return values[static_cast<std::size_t>(std::llround(q * static_cast<double>(r - 1)))]; };
    out.push_back({replicas.front().samples[k].tau, sum / static_cast<double>(r), rank(0.1), rank(0.9)});
  }
  return out;
}

EnsembleResult run_ensemble_serial(const SimConfig& config) {
  config.validate();
  EnsembleResult result;
  result.config = config;
  result.replicas.reserve(static_cast<std::size_t>(config.replicas));
  for (std::int64_t i = 0; i < config.replicas; ++i) result.replicas.push_back(run_replica(config, i));
  result.aggregate = aggregate_replicas(result.replicas);
  return result;
}

EnsembleResult run_ensemble(const SimConfig& config) {
  config.validate();
  EnsembleResult result;
  result.config = config;
  result.replicas.resize(static_cast<std::size_t>(config.replicas));
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < config.replicas; ++i) {
    try {
      result.replicas[static_cast<std::size_t>(i)] = run_replica(config, i);
    } catch (...) {
#pragma omp critical(sharekin_ensemble_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  result.aggregate = aggregate_replicas(result.replicas);
  return result;
}

std::vector<HistogramBin> log_histogram(std::span<const double> values, LogBins bins) {
  if (values.empty()) return {};
  if (!(bins.lo > 0.0) || !(bins.hi > bins.lo) || bins.per_decade < 1) throw invalid_argument("invalid log-bin spec");
  const double pd = bins.per_decade;
  const auto bin_of = [pd](double x) { return static_cast<long>(std::floor(std::log10(x) * pd + 1e-9)); };
  const long first = bin_of(bins.lo);
  const long last = bin_of(bins.hi);
  std::vector<double> counts(static_cast<std::size_t>(last - first + 1), 0.0);
  for (double v : values) {
    const long k = std::clamp(bin_of(v), first, last);
    counts[static_cast<std::size_t>(k - first)] += 1.0;
  }
  std::vector<HistogramBin> out;
  out.reserve(counts.size());
  const double n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double lo = std::pow(10.0, static_cast<double>(first + static_cast<long>(i)) / pd);
    const double hi = std::pow(10.0, static_cast<double>(first + static_cast<long>(i) + 1) / pd);
    out.push_back({lo, hi, counts[i] / (n * (hi - lo))});
  }
  return out;
}

std::vector<HistogramBin> share_histogram(const EnsembleResult& ensemble, double tau, LogBins bins) {
  const auto idx = ensemble.sample_index(tau);
  if (!idx) throw not_recorded("tau was not sampled");
  const double m = static_cast<double>(ensemble.config.params.total_particles);
  std::vector<double> shares;
  for (const auto& rep : ensemble.replicas) {
    const auto& sample = rep.samples[*idx];
    if (!sample.counts) throw not_recorded("no snapshot recorded at this tau");
    for (Count c : *sample.counts) shares.push_back(static_cast<double>(c) / m);
  }
  if (bins.lo == 0.0) bins.lo = 1.0 / m;
  return log_histogram(shares, bins);
}

GrowthSamples simulated_growth_rates(const EnsembleResult& ensemble) {
  const auto& taus = ensemble.config.sample_taus;
  std::vector<std::pair<std::size_t, std::size_t>> steps;
  const auto has_snapshot = [&](std::size_t k) {
    return !ensemble.replicas.empty() && ensemble.replicas.front().samples[k].counts.has_value();
  };
  for (std::size_t k = 0; k + 1 < taus.size(); ++k)
    if (std::abs(taus[k + 1] - taus[k] - 1.0) < 1e-9 && std::abs(taus[k] - std::round(taus[k])) < 1e-9 &&
        has_snapshot(k) && has_snapshot(k + 1))
      steps.emplace_back(k, k + 1);
  if (steps.empty()) throw not_recorded("no snapshots at consecutive integer taus");

  const auto n = static_cast<std::size_t>(ensemble.config.params.n_sites);
  GrowthSamples out(steps.size(), n, ensemble.replicas.size());
  for (std::size_t i = 0; i < ensemble.replicas.size(); ++i) {
    const auto& samples = ensemble.replicas[i].samples;
    for (std::size_t s = 0; s < steps.size(); ++s) {
      const auto& before = *samples[steps[s].first].counts;
      const auto& after = *samples[steps[s].second].counts;
      for (std::size_t p = 0; p < n; ++p)
        out.at(s, p, i) = std::log10(static_cast<double>(after[p]) / static_cast<double>(before[p]));
    }
  }
  return out;
}

}  // namespace sharekin
