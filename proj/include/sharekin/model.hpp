#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace sharekin {

using Count = std::int32_t;

/// Parameters of the urn model: N sites sharing M particles, hop exponent b.
struct ModelParams {
  std::int64_t n_sites = 2;
  std::int64_t total_particles = 2;
  double exponent = 2.0;

  ModelParams() = default;
  ModelParams(std::int64_t n, std::int64_t m, double b);

  static ModelParams from_density(std::int64_t n, std::int64_t rho, double b = 2.0);

  /// a = 1/M, the share carried by one particle.
  double unit_share() const { return 1.0 / static_cast<double>(total_particles); }
  double density() const { return static_cast<double>(total_particles) / static_cast<double>(n_sites); }
};

/// Site weight m^b. Exact multiplication for the common integer exponents.
double site_weight(Count m, double b);
double log_site_weight(Count m, double b);

/// Microstate: particle count per site, with the cached weight sum S = sum m^b.
class Configuration {
 public:
  Configuration() = default;
  Configuration(std::vector<Count> counts, double b);

  static Configuration uniform(const ModelParams& params);

  std::span<const Count> counts() const { return counts_; }
  Count operator[](std::size_t site) const { return counts_[site]; }
  std::size_t size() const { return counts_.size(); }
  double exponent() const { return exponent_; }
  std::int64_t total() const { return total_; }
  /// S = sum m^b. For large b the weights are held as exp(b log m - log_scale()).
  double weight_sum() const { return weight_sum_ * std::exp(log_scale_); }
  double scaled_weight_sum() const { return weight_sum_; }
  double log_scale() const { return log_scale_; }
  /// Weight of a site holding m particles, in the scaled units of scaled_weight_sum().
  double weight(Count m) const;

  /// Moves one particle. Requires counts[source] >= 2 and source != dest.
  void move_particle(std::size_t source, std::size_t dest);
  /// Recomputes S from scratch; returns the relative drift that was removed.
  double refresh_weight_sum();

  bool operator==(const Configuration& other) const { return counts_ == other.counts_; }

 private:
  std::vector<Count> counts_;
  double exponent_ = 2.0;
  std::int64_t total_ = 0;
  double weight_sum_ = 0.0;
  double log_scale_ = 0.0;
};

struct ShareVector {
  std::vector<double> shares;
  double label = 0.0;  // year or tau
};

/// Hop rate u(source -> dest) = (m_s m_d)^b / S, zero when the source holds one particle.
double transfer_rate(const Configuration& cfg, std::size_t source, std::size_t dest);

/// Sum of transfer_rate over all ordered pairs.
double total_exit_rate(const Configuration& cfg);

/// Largest-remainder rounding of A_p * M with every site floored at one particle.
Configuration discretize_shares(const ShareVector& shares, std::int64_t total_particles, double b = 2.0);

ShareVector shares_of(const Configuration& cfg);

}  // namespace sharekin
