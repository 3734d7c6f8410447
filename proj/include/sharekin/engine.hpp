#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "sharekin/model.hpp"
#include "sharekin/weight_index.hpp"

namespace sharekin {

/// Model time per calendar year: pi c^2 / 4 with c = 0.1.
inline constexpr double kDefaultDeltaTTilde = 0.0078539816339744830962;

/// Portable uniform draws on top of std::mt19937_64 (std distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  std::uint64_t next() { return gen_(); }
  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  /// Exponential with unit rate.
  double exponential() { return -std::log1p(-uniform()); }
  /// Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 gen_;
};

std::uint64_t splitmix64(std::uint64_t x);
/// Replica stream seed: splitmix64(base ^ splitmix64(replica_id)).
std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t replica_id);

struct Event {
  double elapsed = std::numeric_limits<double>::infinity();
  bool accepted = false;
  std::size_t source = 0;
  std::size_t dest = 0;
};

/// Exact continuous-time simulation by thinning. Proposals arrive at rate S; source and destination
/// are drawn independently with probability m^b / S. A proposal is accepted when the sites differ
/// and the source holds at least two particles, so pair (p, q) fires at rate (m_p m_q)^b / S.
class Engine {
 public:
  Engine(Configuration cfg, std::uint64_t seed);

  /// One proposal. A frozen configuration returns the no-event marker (infinite elapsed time).
  Event step();

  /// Runs until model time t_end. `on_move(time, source, dest, cfg_before)` is invoked right before
  /// every accepted move.
  template <class OnMove>
  void advance_to(double t_end, OnMove&& on_move);
  void advance_to(double t_end) {
    advance_to(t_end, [](double, std::size_t, std::size_t, const Configuration&) {});
  }

  const Configuration& configuration() const { return cfg_; }
  double time() const { return now_; }
  bool frozen() const { return emitters_ == 0; }
  std::uint64_t proposals() const { return proposals_; }
  std::uint64_t accepted() const { return accepted_; }
  double acceptance_ratio() const {
    return proposals_ == 0 ? 0.0 : static_cast<double>(accepted_) / static_cast<double>(proposals_);
  }
  const WeightIndex& index() const { return index_; }

  static constexpr std::uint64_t kRefreshInterval = std::uint64_t{1} << 20;

 private:
  void schedule_next();
  /// Fires the pending proposal at next_time_: draws source and destination, applies the move when
  /// accepted, then schedules the following proposal.
  template <class OnMove>
  Event propose(OnMove& on_move);
  void refresh();

  Configuration cfg_;
  WeightIndex index_;
  Rng rng_;
  double now_ = 0.0;
  double next_time_ = 0.0;
  double time_unit_ = 1.0;  // exp(-log_scale): converts scaled-rate waiting times to model time
  std::int64_t emitters_ = 0;
  std::uint64_t proposals_ = 0;
  std::uint64_t accepted_ = 0;
  std::uint64_t since_refresh_ = 0;
};

template <class OnMove>
Event Engine::propose(OnMove& on_move) {
  Event ev;
  ev.elapsed = next_time_ - now_;
  now_ = next_time_;
  ++proposals_;
  ev.source = index_.find(rng_.uniform() * index_.total());
  ev.dest = index_.find(rng_.uniform() * index_.total());
  if (ev.source != ev.dest && cfg_[ev.source] >= 2) {
    on_move(now_, ev.source, ev.dest, static_cast<const Configuration&>(cfg_));
    cfg_.move_particle(ev.source, ev.dest);
    index_.set(ev.source, cfg_.weight(cfg_[ev.source]));
    index_.set(ev.dest, cfg_.weight(cfg_[ev.dest]));
    if (cfg_[ev.source] == 1) --emitters_;
    if (cfg_[ev.dest] == 2) ++emitters_;
    ++accepted_;
    ev.accepted = true;
    if (++since_refresh_ >= kRefreshInterval) refresh();
  }
  schedule_next();
  return ev;
}

template <class OnMove>
void Engine::advance_to(double t_end, OnMove&& on_move) {
  while (!frozen() && next_time_ <= t_end) propose(on_move);
  if (t_end > now_) now_ = t_end;
}

// ---------------------------------------------------------------------------------------------
// Replica runs and ensembles

struct SimConfig {
  ModelParams params;
  /// Initial shares; uniform counts when empty.
  std::optional<ShareVector> init_shares;
  double delta_t_tilde = kDefaultDeltaTTilde;
  double max_tau = 0.0;
  std::vector<double> sample_taus;
  /// Taus (subset of sample_taus) at which full count arrays are stored.
  std::vector<double> snapshot_taus;
  std::int64_t replicas = 1;
  std::uint64_t base_seed = 1;

  /// Throws invalid_argument when the invariants do not hold.
  void validate() const;
  Configuration initial_configuration() const;
  /// Sample and snapshot at every integer tau in [0, max_tau].
  static std::vector<double> integer_taus(double max_tau);
};

struct TrajectorySample {
  double tau = 0.0;
  double second_moment = 0.0;  // N^-1 sum A_p^2
  std::optional<std::vector<Count>> counts;
};

struct Trajectory {
  std::int64_t replica = 0;
  std::vector<TrajectorySample> samples;
  std::uint64_t proposals = 0;
  std::uint64_t accepted = 0;
};

struct BandPoint {
  double tau = 0.0;
  double mean = 0.0;
  double lo = 0.0;  // 10th percentile across replicas
  double hi = 0.0;  // 90th percentile across replicas
};

struct EnsembleResult {
  SimConfig config;
  std::vector<Trajectory> replicas;
  std::vector<BandPoint> aggregate;

  /// Index of tau in config.sample_taus, or nullopt.
  std::optional<std::size_t> sample_index(double tau) const;
};

double second_moment(const Configuration& cfg);

Trajectory run_replica(const SimConfig& config, std::int64_t replica_id);
/// Replicas in parallel (OpenMP). Bit-identical to run_ensemble_serial.
EnsembleResult run_ensemble(const SimConfig& config);
EnsembleResult run_ensemble_serial(const SimConfig& config);
/// Cross-replica mean and central-80% band per sample tau.
std::vector<BandPoint> aggregate_replicas(const std::vector<Trajectory>& replicas);

struct LogBins {
  double lo = 0.0;  // 0 means 1/M
  double hi = 1.0;
  int per_decade = 10;
};

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  double density = 0.0;
};

/// Log-binned density of A = m/M pooled over replicas at a snapshot tau.
std::vector<HistogramBin> share_histogram(const EnsembleResult& ensemble, double tau, LogBins bins = {});
std::vector<HistogramBin> log_histogram(std::span<const double> values, LogBins bins);

/// r~_p^(i)(tau) = log10(A_p(tau+1) / A_p(tau)), one value per (step, product, replica).
class GrowthSamples {
 public:
  GrowthSamples() = default;
  GrowthSamples(std::size_t steps, std::size_t products, std::size_t replicas)
      : steps_(steps), products_(products), replicas_(replicas), values_(steps * products * replicas) {}

  std::size_t steps() const { return steps_; }
  std::size_t products() const { return products_; }
  std::size_t replicas() const { return replicas_; }
  double& at(std::size_t step, std::size_t product, std::size_t replica) {
    return values_[(step * products_ + product) * replicas_ + replica];
  }
  double at(std::size_t step, std::size_t product, std::size_t replica) const {
    return values_[(step * products_ + product) * replicas_ + replica];
  }
  /// All replica values for one (step, product).
  std::span<const double> ensemble(std::size_t step, std::size_t product) const {
    return {values_.data() + (step * products_ + product) * replicas_, replicas_};
  }

 private:
  std::size_t steps_ = 0, products_ = 0, replicas_ = 0;
  std::vector<double> values_;
};

/// Requires snapshots at consecutive integer taus; uses every such consecutive pair.
GrowthSamples simulated_growth_rates(const EnsembleResult& ensemble);

}  // namespace sharekin
