// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <string>

#include "phylab/constellation.hpp"
#include "phylab/experiments.hpp"
#include "phylab/nn.hpp"
#include "phylab/rng.hpp"

namespace phylab::experiments::detail {

/// Hamming distance between the bit patterns of two constellation labels.
inline int label_bit_errors(const classical::Constellation& c, int want, int got) {
  std::vector<std::uint8_t> a(static_cast<std::size_t>(c.bits_per_symbol()));
  std::vector<std::uint8_t> b(a.size());
  c.label_to_bits(want, a.data());
  c.label_to_bits(got, b.data());
  int errors = 0;
  for (std::size_t i = 0; i < a.size(); ++i) errors += a[i] != b[i];
  return errors;
}

// Seed stream namespaces: every random draw in a runner comes from
// derive_seed(master, {salt, ...}) with one of these as the leading salt, so
// evaluation, dataset generation and training never share a stream.
inline constexpr std::uint64_t kSaltEval = 1;
inline constexpr std::uint64_t kSaltDataset = 2;
inline constexpr std::uint64_t kSaltTrain = 3;

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

/// Diagnostics key "<base>@<snr>" with %g-formatted SNR.
inline std::string snr_key(const std::string& base, double snr_db) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", snr_db);
  return base + "@" + buf;
}

void append_point(SweepResult& out, const std::string& method, double snr_db,
                  metrics::Metric metric, const metrics::MetricValue& v);

/// Rows [begin, begin+count) of a dataset.
nn::Dataset slice_examples(const nn::Dataset& pool, std::int64_t begin, std::int64_t count);

/// Cuts one pool into consecutive train/validation/test row blocks. The
/// counts must cover the pool exactly; the index partition is audited
/// (pairwise-disjoint ranges, full coverage) before returning.
SplitDataset split_pool(const nn::Dataset& pool, std::int64_t train_count,
                        std::int64_t validation_count, std::int64_t test_count,
                        std::uint64_t seed);

/// Xavier init + SGD on the pool's leading rows (first train_examples rows
/// train, next validation_examples rows validate). Seeds derive from
/// (master, kSaltTrain, net_id). When requested, the final validation loss is
/// written out (NaN if no validation split was held).
nn::Mlp fit_network(const nn::MlpSpec& spec, nn::Loss loss, const nn::Dataset& pool,
                    const TrainParams& tp, std::uint64_t master, std::uint64_t net_id,
                    double* final_validation_loss = nullptr);

// Supervised example generators, one per learning arm. Each draws examples
// sequentially from one seeded stream, so a longer pool extends a shorter
// one row for row (dataset files and in-run training stay consistent).
nn::Dataset ofdm_examples(const OfdmReceiverConfig& cfg, int setting, std::uint64_t seed,
                          std::int64_t count);
nn::Dataset noma_examples(const NomaDetectionConfig& cfg, bool high_quality_csi,
                          std::uint64_t seed, std::int64_t count);
nn::Dataset autoencoder_examples(std::uint64_t seed, std::int64_t count);
nn::Dataset doa_examples(const DoaEstimationConfig& cfg, std::uint64_t seed, std::int64_t count);
nn::Dataset gain_examples(const GainEstimationConfig& cfg, std::uint64_t seed,
                          std::int64_t count);
nn::Dataset mmwave_examples(const MmwavePrecodingConfig& cfg, std::uint64_t seed,
                            std::int64_t count);

}  // namespace phylab::experiments::detail
