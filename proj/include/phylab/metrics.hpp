// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace phylab::metrics {

enum class Metric { BitErrorRate, BlockErrorRate, MseDeg2, SumRateBpsHz };

/// Stable names used in the results CSV.
inline std::string metric_name(Metric m) {
  switch (m) {
    case Metric::BitErrorRate: return "ber";
    case Metric::BlockErrorRate: return "bler";
    case Metric::MseDeg2: return "mse_deg2";
    case Metric::SumRateBpsHz: return "rate_bps_hz";
  }
  throw std::invalid_argument("metric_name: unknown metric");
}

/// A point estimate with its standard error and the sample count behind it.
struct MetricValue {
  double value = 0.0;
  double standard_error = 0.0;
  std::int64_t count = 0;
};

/// Tally of Bernoulli outcomes; the standard error is the binomial
/// sqrt(p(1-p)/n).
class ProportionAccumulator {
 public:
  void add(bool hit) { add(hit ? 1 : 0, 1); }
  void add(std::int64_t hits, std::int64_t total) {
    if (hits < 0 || total < hits) throw std::invalid_argument("proportion: bad counts");
    hits_ += hits;
    total_ += total;
  }
  std::int64_t count() const { return total_; }
  double value() const {
    if (total_ == 0) throw std::logic_error("proportion: empty");
    return static_cast<double>(hits_) / static_cast<double>(total_);
  }
  double standard_error() const {
    const double p = value();
    return std::sqrt(p * (1.0 - p) / static_cast<double>(total_));
  }
  MetricValue result() const { return {value(), standard_error(), count()}; }

 private:
  std::int64_t hits_ = 0;
  std::int64_t total_ = 0;
};

/// Streaming mean and variance (Welford); the standard error is sd/sqrt(n).
class MeanAccumulator {
 public:
  void add(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }
  std::int64_t count() const { return n_; }
  double value() const {
    if (n_ == 0) throw std::logic_error("mean: empty");
    return mean_;
  }
  double standard_error() const {
    if (n_ < 2) return 0.0;
    const double var = m2_ / static_cast<double>(n_ - 1);
    return std::sqrt(var / static_cast<double>(n_));
  }
  MetricValue result() const { return {value(), standard_error(), count()}; }

 private:
  std::int64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Fraction of differing bits.
inline MetricValue bit_error_rate(const std::vector<std::uint8_t>& truth,
                                  const std::vector<std::uint8_t>& decisions) {
  if (truth.size() != decisions.size() || truth.empty())
    throw std::invalid_argument("bit_error_rate: size mismatch or empty");
  ProportionAccumulator acc;
  for (std::size_t i = 0; i < truth.size(); ++i) acc.add(truth[i] != decisions[i]);
  return acc.result();
}

/// Fraction of length-bits_per_block blocks with at least one differing bit.
inline MetricValue block_error_rate(const std::vector<std::uint8_t>& truth,
                                    const std::vector<std::uint8_t>& decisions,
                                    int bits_per_block) {
  if (bits_per_block < 1 || truth.size() != decisions.size() || truth.empty() ||
      truth.size() % static_cast<std::size_t>(bits_per_block) != 0)
    throw std::invalid_argument("block_error_rate: bad block layout");
  ProportionAccumulator acc;
  const std::size_t stride = static_cast<std::size_t>(bits_per_block);
  for (std::size_t b = 0; b < truth.size(); b += stride) {
    bool hit = false;
    for (std::size_t i = 0; i < stride; ++i) hit = hit || truth[b + i] != decisions[b + i];
    acc.add(hit);
  }
  return acc.result();
}

/// Mean squared angular error in squared degrees.
inline MetricValue squared_error_deg2(const std::vector<double>& truth_deg,
                                      const std::vector<double>& estimates_deg) {
  if (truth_deg.size() != estimates_deg.size() || truth_deg.empty())
    throw std::invalid_argument("squared_error_deg2: size mismatch or empty");
  MeanAccumulator acc;
  for (std::size_t i = 0; i < truth_deg.size(); ++i) {
    const double e = estimates_deg[i] - truth_deg[i];
    acc.add(e * e);
  }
  return acc.result();
}

/// Gaussian tail Q(x) = P(N(0,1) > x).
inline double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

}  // namespace phylab::metrics
