// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "phylab/classical.hpp"
#include "phylab/constellation.hpp"
#include "phylab/experiments.hpp"
#include "phylab/textcfg.hpp"
#include "src/experiments/exp_internal.hpp"

namespace phylab::experiments {
namespace {

constexpr int kJointLabels = 16;  // QPSK pair

struct Block {
  Complex g1, g2;      // block-fading user channels
  Complex yp1, yp2;    // unit-pilot observations
  int label1, label2;  // transmitted QPSK labels
  Complex y;           // superposed data observation
};

Block draw_block(double power_strong, double pilot_sigma2, double data_sigma2,
                 const classical::Constellation& qpsk, Rng& rng) {
  Block b;
  b.g1 = rng.complex_gaussian(1.0);
  b.g2 = rng.complex_gaussian(1.0);
  b.yp1 = b.g1 + rng.complex_gaussian(pilot_sigma2);
  b.yp2 = b.g2 + rng.complex_gaussian(pilot_sigma2);
  b.label1 = rng.uniform_int(qpsk.size());
  b.label2 = rng.uniform_int(qpsk.size());
  b.y = std::sqrt(power_strong) * b.g1 * qpsk.map_label(b.label1) +
        std::sqrt(1.0 - power_strong) * b.g2 * qpsk.map_label(b.label2) +
        rng.complex_gaussian(data_sigma2);
  return b;
}

}  // namespace

bool NomaDetectionConfig::apply(const std::string& key, const std::string& value) {
  if (sweep.apply(key, value) || train.apply(key, value)) return true;
  if (key == "power_strong") {
    power_strong = textcfg::parse_real(value);
  } else if (key == "pilot_snr_hi_db") {
    pilot_snr_hi_db = textcfg::parse_real(value);
  } else if (key == "pilot_snr_lo_db") {
    pilot_snr_lo_db = textcfg::parse_real(value);
  } else if (key == "hidden1") {
    hidden1 = static_cast<int>(textcfg::parse_int(value));
  } else if (key == "hidden2") {
    hidden2 = static_cast<int>(textcfg::parse_int(value));
  } else if (key == "include_dnn") {
    include_dnn = textcfg::parse_flag(value);
  } else {
    return false;
  }
  return true;
}

void NomaDetectionConfig::validate() const {
  sweep.validate();
  train.validate();
  if (!(power_strong > 0.0 && power_strong < 1.0))
    throw std::invalid_argument("power_strong must be in (0, 1)");
  if (hidden1 < 1 || hidden2 < 1) throw std::invalid_argument("hidden widths must be >= 1");
}

namespace detail {

nn::Dataset noma_examples(const NomaDetectionConfig& cfg, bool high_quality_csi,
                          std::uint64_t seed, std::int64_t count) {
  Rng rng(seed);
  const classical::Constellation qpsk(classical::ConstellationKind::QPSK);
  const double pilot_sigma2 =
      std::pow(10.0, -(high_quality_csi ? cfg.pilot_snr_hi_db : cfg.pilot_snr_lo_db) / 10.0);
  nn::Dataset out;
  out.features.resize(count, 6);
  out.labels = RealMatrix::Zero(count, kJointLabels);
  for (std::int64_t i = 0; i < count; ++i) {
    const double snr_db =
        rng.uniform(cfg.sweep.snr_grid_db.front(), cfg.sweep.snr_grid_db.back());
    const Block b = draw_block(cfg.power_strong, pilot_sigma2, std::pow(10.0, -snr_db / 10.0),
                               qpsk, rng);
    out.features(i, 0) = b.y.real();
    out.features(i, 1) = b.y.imag();
    out.features(i, 2) = b.yp1.real();
    out.features(i, 3) = b.yp1.imag();
    out.features(i, 4) = b.yp2.real();
    out.features(i, 5) = b.yp2.imag();
    out.labels(i, b.label1 * 4 + b.label2) = 1.0;
  }
  return out;
}

}  // namespace detail

SweepResult run_noma_detection(const NomaDetectionConfig& cfg) {
  cfg.validate();
  const detail::Timer timer;
  const std::uint64_t master = cfg.sweep.master_seed;
  const classical::Constellation qpsk(classical::ConstellationKind::QPSK);
  const classical::NomaConfig noma{{cfg.power_strong, 1.0 - cfg.power_strong}};
  SweepResult out;
  out.experiment = "noma_detection";
  out.master_seed = master;

  // Method ids: 0/1 dnn hi/lo, 2/3 sic_ls hi/lo, 4 sic_perfect,
  // 5 rate sic_perfect, 6/7 rate sic_ls hi/lo.
  nn::Mlp nets[2];
  if (cfg.include_dnn) {
    nn::MlpSpec spec;
    spec.layer_sizes = {6, cfg.hidden1, cfg.hidden2, kJointLabels};
    spec.activations = {nn::Activation::ReLU, nn::Activation::ReLU, nn::Activation::Softmax};
    for (int q = 0; q < 2; ++q) {
      const bool hi = q == 0;
      const nn::Dataset pool = detail::noma_examples(
          cfg, hi, derive_seed(master, {detail::kSaltDataset, static_cast<std::uint64_t>(q)}),
          cfg.train.train_examples + cfg.train.validation_examples);
      nets[q] = detail::fit_network(spec, nn::Loss::SoftmaxCrossEntropy, pool, cfg.train,
                                    master, static_cast<std::uint64_t>(q),
                                    &out.diagnostics[q == 0 ? "val_loss_hi" : "val_loss_lo"]);
      out.models.push_back({hi ? "dnn_hi" : "dnn_lo", nets[q]});
    }
  }

  const std::int64_t trials = cfg.sweep.trials_per_point;
  const double pilot_sigma2_of[2] = {std::pow(10.0, -cfg.pilot_snr_hi_db / 10.0),
                                     std::pow(10.0, -cfg.pilot_snr_lo_db / 10.0)};

  // Learned receiver, joint symbol decision, both pilot qualities.
  if (cfg.include_dnn) {
    for (int q = 0; q < 2; ++q) {
      const std::string tag = q == 0 ? "hi" : "lo";
      const std::uint64_t method_id = static_cast<std::uint64_t>(q);
      for (std::size_t si = 0; si < cfg.sweep.snr_grid_db.size(); ++si) {
        const double snr_db = cfg.sweep.snr_grid_db[si];
        const double data_sigma2 = std::pow(10.0, -snr_db / 10.0);
        // One symbol per user per trial: both bits share the fading draw, so
        // error fractions are accumulated per trial.
        metrics::MeanAccumulator ber1;
        metrics::MeanAccumulator ber2;
        constexpr std::int64_t kChunk = 4096;
        RealMatrix features(6, kChunk);
        std::vector<int> want1(kChunk);
        std::vector<int> want2(kChunk);
        for (std::int64_t base = 0; base < trials; base += kChunk) {
          const std::int64_t m = std::min(kChunk, trials - base);
          for (std::int64_t c = 0; c < m; ++c) {
            Rng rng(derive_seed(master, {detail::kSaltEval, method_id, si,
                                         static_cast<std::uint64_t>(base + c)}));
            const Block b =
                draw_block(cfg.power_strong, pilot_sigma2_of[q], data_sigma2, qpsk, rng);
            features.col(c) << b.y.real(), b.y.imag(), b.yp1.real(), b.yp1.imag(),
                b.yp2.real(), b.yp2.imag();
            want1[static_cast<std::size_t>(c)] = b.label1;
            want2[static_cast<std::size_t>(c)] = b.label2;
          }
          const RealMatrix scores =
              nn::forward(nets[q], features.leftCols(m)).activations.back();
          for (std::int64_t c = 0; c < m; ++c) {
            Eigen::Index joint;
            scores.col(c).maxCoeff(&joint);
            const int got1 = static_cast<int>(joint) / 4;
            const int got2 = static_cast<int>(joint) % 4;
            ber1.add(detail::label_bit_errors(qpsk, want1[static_cast<std::size_t>(c)], got1) / 2.0);
            ber2.add(detail::label_bit_errors(qpsk, want2[static_cast<std::size_t>(c)], got2) / 2.0);
          }
        }
        detail::append_point(out, "dnn_" + tag + "_u1", snr_db, metrics::Metric::BitErrorRate,
                             ber1.result());
        detail::append_point(out, "dnn_" + tag + "_u2", snr_db, metrics::Metric::BitErrorRate,
                             ber2.result());
      }
    }
  }

  // Least-squares gains + successive cancellation, and the genie reference.
  for (int variant = 0; variant < 3; ++variant) {
    const bool perfect = variant == 2;
    const std::string name = perfect ? "sic_perfect" : (variant == 0 ? "sic_ls_hi" : "sic_ls_lo");
    const std::uint64_t method_id = static_cast<std::uint64_t>(2 + variant);
    for (std::size_t si = 0; si < cfg.sweep.snr_grid_db.size(); ++si) {
      const double snr_db = cfg.sweep.snr_grid_db[si];
      const double data_sigma2 = std::pow(10.0, -snr_db / 10.0);
      metrics::MeanAccumulator ber1;
      metrics::MeanAccumulator ber2;
      for (std::int64_t t = 0; t < trials; ++t) {
        Rng rng(derive_seed(master, {detail::kSaltEval, method_id, si,
                                     static_cast<std::uint64_t>(t)}));
        const Block b = draw_block(cfg.power_strong,
                                   perfect ? 0.0 : pilot_sigma2_of[variant], data_sigma2,
                                   qpsk, rng);
        const std::vector<Complex> gains = perfect
                                               ? std::vector<Complex>{b.g1, b.g2}
                                               : std::vector<Complex>{b.yp1, b.yp2};
        ComplexVector y(1);
        y(0) = b.y;
        const auto sic = classical::sic_decode(y, gains, noma, qpsk);
        const int got1 = qpsk.slice_label(sic.symbols[0](0));
        const int got2 = qpsk.slice_label(sic.symbols[1](0));
        ber1.add(detail::label_bit_errors(qpsk, b.label1, got1) / 2.0);
        ber2.add(detail::label_bit_errors(qpsk, b.label2, got2) / 2.0);
      }
      detail::append_point(out, name + "_u1", snr_db, metrics::Metric::BitErrorRate,
                           ber1.result());
      detail::append_point(out, name + "_u2", snr_db, metrics::Metric::BitErrorRate,
                           ber2.result());
    }
  }

  // Sum rate under successive cancellation; gain-estimation error is charged
  // to the noise term (sigma_eff^2 = sigma^2 + sum_u p_u sigma_pilot^2).
  for (int variant = 0; variant < 3; ++variant) {
    const bool perfect = variant == 0;
    const std::string name =
        perfect ? "sic_perfect" : (variant == 1 ? "sic_ls_hi" : "sic_ls_lo");
    const std::uint64_t method_id = static_cast<std::uint64_t>(5 + variant);
    const double pilot_sigma2 = perfect ? 0.0 : pilot_sigma2_of[variant - 1];
    for (std::size_t si = 0; si < cfg.sweep.snr_grid_db.size(); ++si) {
      const double snr_db = cfg.sweep.snr_grid_db[si];
      const double data_sigma2 = std::pow(10.0, -snr_db / 10.0);
      metrics::MeanAccumulator rate;
      for (std::int64_t t = 0; t < trials; ++t) {
        Rng rng(derive_seed(master, {detail::kSaltEval, method_id, si,
                                     static_cast<std::uint64_t>(t)}));
        const Block b = draw_block(cfg.power_strong, pilot_sigma2, data_sigma2, qpsk, rng);
        const std::vector<Complex> gains = perfect
                                               ? std::vector<Complex>{b.g1, b.g2}
                                               : std::vector<Complex>{b.yp1, b.yp2};
        const RealVector rates =
            classical::achievable_rate(gains, noma, data_sigma2 + pilot_sigma2);
        rate.add(rates.sum());
      }
      detail::append_point(out, name, snr_db, metrics::Metric::SumRateBpsHz, rate.result());
    }
  }

  out.wall_seconds = timer.seconds();
  return out;
}

}  // namespace phylab::experiments
