// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "phylab/channel.hpp"
#include "phylab/classical.hpp"
#include "phylab/constellation.hpp"
#include "phylab/experiments.hpp"
#include "phylab/textcfg.hpp"
#include "src/experiments/exp_internal.hpp"

namespace phylab::experiments {
namespace {

// Settings, in method order: full pilot comb, reduced comb, no cyclic prefix.
constexpr int kNumSettings = 3;
const char* const kSettingNames[kNumSettings] = {"full", "reduced", "nocp"};

channel::OfdmConfig link_of(const OfdmReceiverConfig& cfg, int setting) {
  channel::OfdmConfig link;
  link.num_subcarriers = cfg.num_subcarriers;
  link.cp_length = setting == 2 ? 0 : cfg.cp_length;
  link.num_taps = cfg.num_taps;
  link.pilot_spacing = setting == 1 ? cfg.reduced_pilot_spacing : 1;
  link.constellation = classical::ConstellationKind::QPSK;
  return link;
}

/// Known pilot values on the comb: a fixed QPSK sequence.
ComplexVector pilot_comb(const channel::OfdmConfig& link,
                         const classical::Constellation& qpsk) {
  ComplexVector comb(link.num_pilots());
  for (int p = 0; p < link.num_pilots(); ++p) comb(p) = qpsk.map_label(p % qpsk.size());
  return comb;
}

struct FrameObservation {
  int judged_label = 0;         // transmitted QPSK label at the judged subcarrier
  ComplexVector rx_pilot;       // demodulated pilot symbol
  ComplexVector rx_data;        // demodulated data symbol
  ComplexVector response;       // true per-subcarrier channel response
};

/// Two-symbol frame (pilot then data) through fresh multipath and additive
/// noise at unit reference power. flat_unit swaps the random taps for a unit
/// impulse, turning the link into plain AWGN.
FrameObservation simulate_frame(const channel::OfdmConfig& link,
                                const classical::Constellation& qpsk, int judged_subcarrier,
                                bool flat_unit, double snr_db, Rng& rng) {
  const int s = link.num_subcarriers;
  ComplexVector taps;
  if (flat_unit) {
    taps = ComplexVector::Zero(link.num_taps);
    taps(0) = 1.0;
  } else {
    taps = channel::sample_multipath_taps(link.num_taps, rng);
  }

  ComplexVector pilot_freq = ComplexVector::Zero(s);
  const ComplexVector comb = pilot_comb(link, qpsk);
  for (int p = 0; p < link.num_pilots(); ++p) pilot_freq(p * link.pilot_spacing) = comb(p);

  ComplexVector data_freq(s);
  FrameObservation frame;
  for (int k = 0; k < s; ++k) {
    const int label = rng.uniform_int(qpsk.size());
    data_freq(k) = qpsk.map_label(label);
    if (k == judged_subcarrier) frame.judged_label = label;
  }

  const ComplexVector tx_pilot = channel::ofdm_modulate(pilot_freq, link);
  const ComplexVector tx_data = channel::ofdm_modulate(data_freq, link);
  ComplexVector tx(tx_pilot.size() + tx_data.size());
  tx << tx_pilot, tx_data;

  ComplexVector rx = channel::apply_multipath(tx, taps);
  rx = channel::apply_awgn(rx, snr_db, 1.0, rng);

  frame.rx_pilot = channel::ofdm_demodulate(rx.head(tx_pilot.size()), link);
  frame.rx_data = channel::ofdm_demodulate(rx.tail(tx_data.size()), link);
  frame.response = channel::channel_freq_response(taps, s);
  return frame;
}

void frame_features(RealMatrix& features, Eigen::Index col, const FrameObservation& frame) {
  const Eigen::Index s = frame.rx_pilot.size();
  for (Eigen::Index k = 0; k < s; ++k) {
    features(k, col) = frame.rx_pilot(k).real();
    features(s + k, col) = frame.rx_pilot(k).imag();
    features(2 * s + k, col) = frame.rx_data(k).real();
    features(3 * s + k, col) = frame.rx_data(k).imag();
  }
}

}  // namespace

bool OfdmReceiverConfig::apply(const std::string& key, const std::string& value) {
  if (sweep.apply(key, value) || train.apply(key, value)) return true;
  if (key == "num_subcarriers") {
    num_subcarriers = static_cast<int>(textcfg::parse_int(value));
  } else if (key == "cp_length") {
    cp_length = static_cast<int>(textcfg::parse_int(value));
  } else if (key == "num_taps") {
    num_taps = static_cast<int>(textcfg::parse_int(value));
  } else if (key == "reduced_pilot_spacing") {
    reduced_pilot_spacing = static_cast<int>(textcfg::parse_int(value));
  } else if (key == "judged_subcarrier") {
    judged_subcarrier = static_cast<int>(textcfg::parse_int(value));
  } else if (key == "train_snr_low_db") {
    train_snr_low_db = textcfg::parse_real(value);
  } else if (key == "train_snr_high_db") {
    train_snr_high_db = textcfg::parse_real(value);
  } else if (key == "hidden1") {
    hidden1 = static_cast<int>(textcfg::parse_int(value));
  } else if (key == "hidden2") {
    hidden2 = static_cast<int>(textcfg::parse_int(value));
  } else if (key == "include_dnn") {
    include_dnn = textcfg::parse_flag(value);
  } else if (key == "channel_profile") {
    const std::string v = textcfg::trim(value);
    if (v != "random" && v != "flat_unit")
      throw std::invalid_argument("expected random or flat_unit, got '" + v + "'");
    flat_unit_channel = v == "flat_unit";
  } else if (key == "genie_csi") {
    genie_csi = textcfg::parse_flag(value);
  } else {
    return false;
  }
  return true;
}

void OfdmReceiverConfig::validate() const {
  sweep.validate();
  train.validate();
  if (num_subcarriers < 2) throw std::invalid_argument("num_subcarriers must be >= 2");
  if (cp_length < 0) throw std::invalid_argument("cp_length must be >= 0");
  if (num_taps < 1) throw std::invalid_argument("num_taps must be >= 1");
  if (reduced_pilot_spacing < 1 || num_subcarriers % reduced_pilot_spacing != 0)
    throw std::invalid_argument("reduced_pilot_spacing must divide num_subcarriers");
  if (judged_subcarrier < 0 || judged_subcarrier >= num_subcarriers)
    throw std::invalid_argument("judged_subcarrier must be inside the subcarrier range");
  if (!(train_snr_low_db <= train_snr_high_db))
    throw std::invalid_argument("train_snr_low_db must be <= train_snr_high_db");
  if (hidden1 < 1 || hidden2 < 1) throw std::invalid_argument("hidden widths must be >= 1");
  for (int setting = 0; setting < kNumSettings; ++setting) link_of(*this, setting).validate();
}

namespace detail {

nn::Dataset ofdm_examples(const OfdmReceiverConfig& cfg, int setting, std::uint64_t seed,
                          std::int64_t count) {
  if (setting < 0 || setting >= kNumSettings)
    throw std::invalid_argument("ofdm_examples: bad setting index");
  Rng rng(seed);
  const classical::Constellation qpsk(classical::ConstellationKind::QPSK);
  const channel::OfdmConfig link = link_of(cfg, setting);
  nn::Dataset out;
  out.features.resize(count, 4 * cfg.num_subcarriers);
  out.labels = RealMatrix::Zero(count, qpsk.size());
  RealMatrix column(4 * cfg.num_subcarriers, 1);
  for (std::int64_t i = 0; i < count; ++i) {
    const double snr_db = rng.uniform(cfg.train_snr_low_db, cfg.train_snr_high_db);
    const FrameObservation frame = simulate_frame(link, qpsk, cfg.judged_subcarrier,
                                                  cfg.flat_unit_channel, snr_db, rng);
    frame_features(column, 0, frame);
    out.features.row(i) = column.col(0).transpose();
    out.labels(i, frame.judged_label) = 1.0;
  }
  return out;
}

}  // namespace detail

SweepResult run_ofdm_receiver(const OfdmReceiverConfig& cfg) {
  cfg.validate();
  const detail::Timer timer;
  const std::uint64_t master = cfg.sweep.master_seed;
  const classical::Constellation qpsk(classical::ConstellationKind::QPSK);
  SweepResult out;
  out.experiment = "ofdm_receiver";
  out.master_seed = master;

  // Method ids: 0..2 dnn per setting, 3..5 ls+zf per setting.
  nn::Mlp nets[kNumSettings];
  if (cfg.include_dnn) {
    nn::MlpSpec spec;
    spec.layer_sizes = {4 * cfg.num_subcarriers, cfg.hidden1, cfg.hidden2, qpsk.size()};
    spec.activations = {nn::Activation::ReLU, nn::Activation::ReLU, nn::Activation::Softmax};
    for (int setting = 0; setting < kNumSettings; ++setting) {
      const nn::Dataset pool = detail::ofdm_examples(
          cfg, setting,
          derive_seed(master, {detail::kSaltDataset, static_cast<std::uint64_t>(setting)}),
          cfg.train.train_examples + cfg.train.validation_examples);
      nets[setting] = detail::fit_network(
          spec, nn::Loss::SoftmaxCrossEntropy, pool, cfg.train, master,
          static_cast<std::uint64_t>(setting),
          &out.diagnostics[std::string("val_loss_") + kSettingNames[setting]]);
      out.models.push_back({std::string("dnn_") + kSettingNames[setting], nets[setting]});
    }
  }

  const std::int64_t trials = cfg.sweep.trials_per_point;
  if (cfg.include_dnn) {
    for (int setting = 0; setting < kNumSettings; ++setting) {
      const channel::OfdmConfig link = link_of(cfg, setting);
      const std::uint64_t method_id = static_cast<std::uint64_t>(setting);
      for (std::size_t si = 0; si < cfg.sweep.snr_grid_db.size(); ++si) {
        const double snr_db = cfg.sweep.snr_grid_db[si];
        // Both bits of the judged symbol share the trial's channel draw, so
        // the error fraction is accumulated per trial.
        metrics::MeanAccumulator ber;
        constexpr std::int64_t kChunk = 2048;
        RealMatrix features(4 * cfg.num_subcarriers, kChunk);
        std::vector<int> want(kChunk);
        for (std::int64_t base = 0; base < trials; base += kChunk) {
          const std::int64_t m = std::min(kChunk, trials - base);
          for (std::int64_t c = 0; c < m; ++c) {
            Rng rng(derive_seed(master, {detail::kSaltEval, method_id, si,
                                         static_cast<std::uint64_t>(base + c)}));
            const FrameObservation frame = simulate_frame(
                link, qpsk, cfg.judged_subcarrier, cfg.flat_unit_channel, snr_db, rng);
            frame_features(features, c, frame);
            want[static_cast<std::size_t>(c)] = frame.judged_label;
          }
          const RealMatrix scores =
              nn::forward(nets[setting], features.leftCols(m)).activations.back();
          for (std::int64_t c = 0; c < m; ++c) {
            Eigen::Index guess;
            scores.col(c).maxCoeff(&guess);
            ber.add(detail::label_bit_errors(qpsk, want[static_cast<std::size_t>(c)],
                                             static_cast<int>(guess)) /
                    2.0);
          }
        }
        detail::append_point(out, std::string("dnn_") + kSettingNames[setting], snr_db,
                             metrics::Metric::BitErrorRate, ber.result());
      }
    }
  }

  for (int setting = 0; setting < kNumSettings; ++setting) {
    const channel::OfdmConfig link = link_of(cfg, setting);
    const ComplexVector comb = pilot_comb(link, qpsk);
    const std::uint64_t method_id = static_cast<std::uint64_t>(kNumSettings + setting);
    for (std::size_t si = 0; si < cfg.sweep.snr_grid_db.size(); ++si) {
      const double snr_db = cfg.sweep.snr_grid_db[si];
      metrics::MeanAccumulator ber;
      for (std::int64_t t = 0; t < trials; ++t) {
        Rng rng(derive_seed(master, {detail::kSaltEval, method_id, si,
                                     static_cast<std::uint64_t>(t)}));
        const FrameObservation frame = simulate_frame(link, qpsk, cfg.judged_subcarrier,
                                                      cfg.flat_unit_channel, snr_db, rng);
        const ComplexVector h_hat =
            cfg.genie_csi ? frame.response
                          : classical::ls_channel_estimate(frame.rx_pilot, comb, link);
        const Complex equalized =
            frame.rx_data(cfg.judged_subcarrier) / h_hat(cfg.judged_subcarrier);
        ber.add(detail::label_bit_errors(qpsk, frame.judged_label,
                                         qpsk.slice_label(equalized)) /
                2.0);
      }
      detail::append_point(out, std::string("lszf_") + kSettingNames[setting], snr_db,
                           metrics::Metric::BitErrorRate, ber.result());
    }
  }

  out.wall_seconds = timer.seconds();
  return out;
}

}  // namespace phylab::experiments
