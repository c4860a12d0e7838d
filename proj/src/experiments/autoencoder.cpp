// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "phylab/classical.hpp"
#include "phylab/experiments.hpp"
#include "phylab/textcfg.hpp"
#include "src/experiments/exp_internal.hpp"

namespace phylab::experiments {
namespace {

constexpr int kDataBits = 4;
constexpr int kCodeUses = 7;
constexpr int kNumMessages = 16;

// Bottleneck-noise SNR (mean square per dimension over noise variance) that
// realizes a given Eb/N0 for 4 bits over 7 real uses: sigma^2 = E_c/(8 rho)
// versus the layer's E_c/7 reference.
double ebn0_to_layer_snr_db(double ebn0_db) {
  return ebn0_db + 10.0 * std::log10(8.0 / 7.0);
}

}  // namespace

bool Autoencoder74Config::apply(const std::string& key, const std::string& value) {
  if (sweep.apply(key, value) || train.apply(key, value)) return true;
  if (key == "hidden") {
    hidden = static_cast<int>(textcfg::parse_int(value));
  } else if (key == "train_ebn0_low_db") {
    train_ebn0_low_db = textcfg::parse_real(value);
  } else if (key == "train_ebn0_high_db") {
    train_ebn0_high_db = textcfg::parse_real(value);
  } else {
    return false;
  }
  return true;
}

void Autoencoder74Config::validate() const {
  sweep.validate();
  train.validate();
  if (hidden < 1) throw std::invalid_argument("hidden must be >= 1");
  if (!(train_ebn0_low_db <= train_ebn0_high_db))
    throw std::invalid_argument("train_ebn0_low_db must be <= train_ebn0_high_db");
}

namespace detail {

nn::Dataset autoencoder_examples(std::uint64_t seed, std::int64_t count) {
  Rng rng(seed);
  nn::Dataset out;
  out.features = RealMatrix::Zero(count, kNumMessages);
  for (std::int64_t i = 0; i < count; ++i) out.features(i, rng.uniform_int(kNumMessages)) = 1.0;
  out.labels = out.features;
  return out;
}

}  // namespace detail

SweepResult run_autoencoder_74(const Autoencoder74Config& cfg) {
  cfg.validate();
  const detail::Timer timer;
  const std::uint64_t master = cfg.sweep.master_seed;
  SweepResult out;
  out.experiment = "autoencoder_74";
  out.master_seed = master;

  nn::MlpSpec spec;
  spec.layer_sizes = {kNumMessages, cfg.hidden, kCodeUses, cfg.hidden, kNumMessages};
  spec.activations = {nn::Activation::Tanh, nn::Activation::Linear, nn::Activation::Tanh,
                      nn::Activation::Softmax};
  spec.noise_layer = nn::NoiseLayerSpec{1, nn::NoiseVarianceKind::UniformSnrDb, 0.0,
                                        ebn0_to_layer_snr_db(cfg.train_ebn0_low_db),
                                        ebn0_to_layer_snr_db(cfg.train_ebn0_high_db)};

  const nn::Dataset pool = detail::autoencoder_examples(
      derive_seed(master, {detail::kSaltDataset, 0}),
      cfg.train.train_examples + cfg.train.validation_examples);
  const nn::Mlp mlp =
      detail::fit_network(spec, nn::Loss::SoftmaxCrossEntropy, pool, cfg.train, master, 0,
                          &out.diagnostics["val_loss"]);
  out.models.push_back({"autoencoder", mlp});

  // Codebook: clean encoder pass over the 16 one-hot messages. Columns are
  // codewords; decoding resumes at the first decoder layer.
  const RealMatrix identity = RealMatrix::Identity(kNumMessages, kNumMessages);
  const RealMatrix codebook = nn::forward(mlp, identity).activations[2];

  // Noise-free sanity: every message must decode back to itself.
  {
    const RealMatrix decoded = nn::forward_range(mlp, codebook, 2).activations.back();
    int wrong = 0;
    for (int m = 0; m < kNumMessages; ++m) {
      Eigen::Index guess;
      decoded.col(m).maxCoeff(&guess);
      wrong += guess != m;
    }
    out.diagnostics["noiseless_block_errors"] = wrong;
  }

  // Method ids: 0 = autoencoder, 1 = hamming_hard.
  const std::int64_t trials = cfg.sweep.trials_per_point;
  for (std::size_t si = 0; si < cfg.sweep.snr_grid_db.size(); ++si) {
    const double ebn0_db = cfg.sweep.snr_grid_db[si];
    const double rho = std::pow(10.0, ebn0_db / 10.0);
    metrics::ProportionAccumulator acc;
    constexpr std::int64_t kChunk = 4096;
    RealMatrix received(kCodeUses, kChunk);
    std::vector<int> sent(kChunk);
    for (std::int64_t base = 0; base < trials; base += kChunk) {
      const std::int64_t m = std::min(kChunk, trials - base);
      for (std::int64_t c = 0; c < m; ++c) {
        Rng rng(derive_seed(master, {detail::kSaltEval, 0, si,
                                     static_cast<std::uint64_t>(base + c)}));
        const int msg = rng.uniform_int(kNumMessages);
        sent[static_cast<std::size_t>(c)] = msg;
        const double sigma = std::sqrt(codebook.col(msg).squaredNorm() / (8.0 * rho));
        for (int u = 0; u < kCodeUses; ++u)
          received(u, c) = codebook(u, msg) + rng.gaussian(0.0, sigma);
      }
      const RealMatrix decoded =
          nn::forward_range(mlp, received.leftCols(m), 2).activations.back();
      for (std::int64_t c = 0; c < m; ++c) {
        Eigen::Index guess;
        decoded.col(c).maxCoeff(&guess);
        acc.add(guess != sent[static_cast<std::size_t>(c)]);
      }
    }
    detail::append_point(out, "autoencoder", ebn0_db, metrics::Metric::BlockErrorRate,
                         acc.result());
  }

  for (std::size_t si = 0; si < cfg.sweep.snr_grid_db.size(); ++si) {
    const double ebn0_db = cfg.sweep.snr_grid_db[si];
    const double rho = std::pow(10.0, ebn0_db / 10.0);
    const double sigma = std::sqrt(7.0 / (8.0 * rho));  // unit-energy coded BPSK
    metrics::ProportionAccumulator acc;
    for (std::int64_t t = 0; t < trials; ++t) {
      Rng rng(derive_seed(master, {detail::kSaltEval, 1, si, static_cast<std::uint64_t>(t)}));
      std::array<std::uint8_t, kDataBits> data;
      for (auto& b : data) b = static_cast<std::uint8_t>(rng.uniform_int(2));
      const auto code = classical::hamming74_encode(data);
      std::array<std::uint8_t, kCodeUses> hard;
      for (int u = 0; u < kCodeUses; ++u) {
        const double y = (code[static_cast<std::size_t>(u)] ? -1.0 : 1.0) +
                         rng.gaussian(0.0, sigma);
        hard[static_cast<std::size_t>(u)] = y < 0.0 ? 1 : 0;
      }
      const auto decoded = classical::hamming74_decode(hard);
      acc.add(decoded != data);
    }
    detail::append_point(out, "hamming_hard", ebn0_db, metrics::Metric::BlockErrorRate,
                         acc.result());
  }

  out.wall_seconds = timer.seconds();
  return out;
}

}  // namespace phylab::experiments
