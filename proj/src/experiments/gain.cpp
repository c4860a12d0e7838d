// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "phylab/channel.hpp"
#include "phylab/classical.hpp"
#include "phylab/constellation.hpp"
#include "phylab/experiments.hpp"
#include "phylab/textcfg.hpp"
#include "src/experiments/exp_internal.hpp"

namespace phylab::experiments {
namespace {

/// Learned gain refinement: g_hat = g_ls + sigma * net(Re g_ls, Im g_ls,
/// sigma), where sigma is the known standard deviation of the least-squares
/// gain error. The scaling pins the noiseless case to the exact LS value and
/// gives the network unit-scale targets.
Complex refine_gain(const nn::Mlp& mlp, Complex g_ls, double sigma) {
  RealMatrix features(3, 1);
  features << g_ls.real(), g_ls.imag(), sigma;
  const RealMatrix delta = nn::forward(mlp, features).activations.back();
  return g_ls + sigma * Complex(delta(0, 0), delta(1, 0));
}

}  // namespace

bool GainEstimationConfig::apply(const std::string& key, const std::string& value) {
  if (sweep.apply(key, value) || train.apply(key, value)) return true;
  if (key == "num_antennas") {
    num_antennas = static_cast<int>(textcfg::parse_int(value));
  } else if (key == "domain_deg") {
    domain_deg = textcfg::parse_real(value);
  } else if (key == "pilot_snapshots") {
    pilot_snapshots = static_cast<int>(textcfg::parse_int(value));
  } else if (key == "music_grid_step_deg") {
    music_grid_step_deg = textcfg::parse_real(value);
  } else if (key == "data_symbols_per_trial") {
    data_symbols_per_trial = static_cast<int>(textcfg::parse_int(value));
  } else if (key == "train_snr_low_db") {
    train_snr_low_db = textcfg::parse_real(value);
  } else if (key == "train_snr_high_db") {
    train_snr_high_db = textcfg::parse_real(value);
  } else if (key == "hidden") {
    hidden = static_cast<int>(textcfg::parse_int(value));
  } else if (key == "include_dnn") {
    include_dnn = textcfg::parse_flag(value);
  } else {
    return false;
  }
  return true;
}

void GainEstimationConfig::validate() const {
  sweep.validate();
  train.validate();
  if (num_antennas < 2) throw std::invalid_argument("num_antennas must be >= 2");
  if (!(domain_deg > 0.0 && domain_deg <= 90.0))
    throw std::invalid_argument("domain_deg must be in (0, 90]");
  if (pilot_snapshots < 1) throw std::invalid_argument("pilot_snapshots must be >= 1");
  if (!(music_grid_step_deg > 0.0))
    throw std::invalid_argument("music_grid_step_deg must be > 0");
  if (data_symbols_per_trial < 1)
    throw std::invalid_argument("data_symbols_per_trial must be >= 1");
  if (!(train_snr_low_db <= train_snr_high_db))
    throw std::invalid_argument("train_snr_low_db must be <= train_snr_high_db");
  if (hidden < 1) throw std::invalid_argument("hidden must be >= 1");
}

namespace detail {

nn::Dataset gain_examples(const GainEstimationConfig& cfg, std::uint64_t seed,
                          std::int64_t count) {
  Rng rng(seed);
  nn::Dataset out;
  out.features.resize(count, 3);
  out.labels.resize(count, 2);
  const double scale = std::sqrt(
      static_cast<double>(cfg.num_antennas) * static_cast<double>(cfg.pilot_snapshots));
  for (std::int64_t i = 0; i < count; ++i) {
    const Complex g = rng.complex_gaussian(1.0);
    const double snr_db = rng.uniform(cfg.train_snr_low_db, cfg.train_snr_high_db);
    const double sigma = std::sqrt(std::pow(10.0, -snr_db / 10.0)) / scale;
    const Complex error = rng.complex_gaussian(sigma * sigma);
    const Complex g_ls = g + error;
    out.features(i, 0) = g_ls.real();
    out.features(i, 1) = g_ls.imag();
    out.features(i, 2) = sigma;
    out.labels(i, 0) = -error.real() / sigma;
    out.labels(i, 1) = -error.imag() / sigma;
  }
  return out;
}

}  // namespace detail

SweepResult run_gain_estimation(const GainEstimationConfig& cfg) {
  cfg.validate();
  const detail::Timer timer;
  const std::uint64_t master = cfg.sweep.master_seed;
  const channel::UlaConfig ula{cfg.num_antennas, 0.5};
  const classical::Constellation qpsk(classical::ConstellationKind::QPSK);
  const int n = cfg.num_antennas;
  SweepResult out;
  out.experiment = "gain_estimation";
  out.master_seed = master;

  nn::Mlp mlp;
  if (cfg.include_dnn) {
    nn::MlpSpec spec;
    spec.layer_sizes = {3, cfg.hidden, cfg.hidden, 2};
    spec.activations = {nn::Activation::Tanh, nn::Activation::Tanh, nn::Activation::Linear};
    const nn::Dataset pool =
        detail::gain_examples(cfg, derive_seed(master, {detail::kSaltDataset, 0}),
                              cfg.train.train_examples + cfg.train.validation_examples);
    mlp = detail::fit_network(spec, nn::Loss::MeanSquaredError, pool, cfg.train, master, 0,
                              &out.diagnostics["val_loss"]);
    out.models.push_back({"gain_refiner", mlp});

    // Noise-free probes with exact angles: both estimators must return the
    // exact gain (the learned correction is scaled by sigma = 0).
    {
      Rng rng(derive_seed(master, {detail::kSaltEval, 90}));
      double worst_ls = 0.0;
      double worst_dnn = 0.0;
      for (int p = 0; p < 64; ++p) {
        const double theta = rng.uniform(-cfg.domain_deg, cfg.domain_deg) * kPi / 180.0;
        const Complex g = rng.complex_gaussian(1.0);
        const ComplexVector a = channel::steering_vector(theta, ula);
        const ComplexVector y = g * a;
        const Complex g_ls = (a.adjoint() * y)(0, 0) / static_cast<double>(n);
        worst_ls = std::max(worst_ls, std::abs(g_ls - g));
        worst_dnn = std::max(worst_dnn, std::abs(refine_gain(mlp, g_ls, 0.0) - g));
      }
      out.diagnostics["noiseless_ls_gain_error"] = worst_ls;
      out.diagnostics["noiseless_dnn_gain_error"] = worst_dnn;
    }

    // Shrinkage probes: at a fixed LS error level, the learned refinement
    // must beat raw least squares on mean squared gain error.
    for (const double sigma : {0.25, 0.5, 1.0}) {
      Rng rng(derive_seed(master, {detail::kSaltEval, 91,
                                   static_cast<std::uint64_t>(sigma * 100.0)}));
      metrics::MeanAccumulator ls_mse;
      metrics::MeanAccumulator dnn_mse;
      for (int p = 0; p < 4096; ++p) {
        const Complex g = rng.complex_gaussian(1.0);
        const Complex g_ls = g + rng.complex_gaussian(sigma * sigma);
        ls_mse.add(std::norm(g_ls - g));
        dnn_mse.add(std::norm(refine_gain(mlp, g_ls, sigma) - g));
      }
      char key[48];
      std::snprintf(key, sizeof key, "probe_gain_mse_ls@%g", sigma);
      out.diagnostics[key] = ls_mse.value();
      std::snprintf(key, sizeof key, "probe_gain_mse_dnn@%g", sigma);
      out.diagnostics[key] = dnn_mse.value();
    }
  }

  // Method ids: 0 = mrc_perfect, 1 = mrc_ls, 2 = mrc_dnn.
  struct Method {
    const char* name;
    std::uint64_t id;
  };
  std::vector<Method> methods = {{"mrc_perfect", 0}, {"mrc_ls", 1}};
  if (cfg.include_dnn) methods.push_back({"mrc_dnn", 2});

  const std::int64_t trials = cfg.sweep.trials_per_point;
  for (const auto& method : methods) {
    for (std::size_t si = 0; si < cfg.sweep.snr_grid_db.size(); ++si) {
      const double snr_db = cfg.sweep.snr_grid_db[si];
      const double sigma2 = std::pow(10.0, -snr_db / 10.0);
      // Bits within a trial share one fading draw, so the error rate is
      // accumulated per trial; the spread across trials gives an honest se.
      metrics::MeanAccumulator ber;
      metrics::MeanAccumulator channel_mse;
      for (std::int64_t t = 0; t < trials; ++t) {
        Rng rng(derive_seed(master, {detail::kSaltEval, method.id, si,
                                     static_cast<std::uint64_t>(t)}));
        const double theta = rng.uniform(-cfg.domain_deg, cfg.domain_deg) * kPi / 180.0;
        const Complex g = rng.complex_gaussian(1.0);
        const ComplexVector a = channel::steering_vector(theta, ula);
        const ComplexVector h = g * a;

        ComplexVector h_hat;
        if (method.id == 0) {
          h_hat = h;
        } else {
          ComplexMatrix pilots(n, cfg.pilot_snapshots);
          for (int s = 0; s < cfg.pilot_snapshots; ++s)
            for (int i = 0; i < n; ++i) pilots(i, s) = h(i) + rng.complex_gaussian(sigma2);
          const auto est = classical::music_doa(pilots, 1, ula, cfg.music_grid_step_deg);
          const double theta_hat =
              (est.degenerate ? 0.0 : est.angles_deg[0]) * kPi / 180.0;
          const ComplexVector a_hat = channel::steering_vector(theta_hat, ula);
          const ComplexVector mean_pilot = pilots.rowwise().mean();
          Complex g_hat = (a_hat.adjoint() * mean_pilot)(0, 0) / static_cast<double>(n);
          if (method.id == 2) {
            const double sigma =
                std::sqrt(sigma2 / (static_cast<double>(n) *
                                    static_cast<double>(cfg.pilot_snapshots)));
            g_hat = refine_gain(mlp, g_hat, sigma);
          }
          h_hat = g_hat * a_hat;
        }
        channel_mse.add((h_hat - h).squaredNorm() / static_cast<double>(n));

        const double h2 = h_hat.squaredNorm();
        int bit_errors = 0;
        for (int k = 0; k < cfg.data_symbols_per_trial; ++k) {
          const int label = rng.uniform_int(qpsk.size());
          const Complex x = qpsk.map_label(label);
          ComplexVector y(n);
          for (int i = 0; i < n; ++i) y(i) = h(i) * x + rng.complex_gaussian(sigma2);
          const Complex soft = (h_hat.adjoint() * y)(0, 0) / h2;
          bit_errors += detail::label_bit_errors(qpsk, label, qpsk.slice_label(soft));
        }
        ber.add(static_cast<double>(bit_errors) /
                (2.0 * static_cast<double>(cfg.data_symbols_per_trial)));
      }
      detail::append_point(out, method.name, snr_db, metrics::Metric::BitErrorRate,
                           ber.result());
      out.diagnostics[detail::snr_key(std::string("chan_mse_") + method.name, snr_db)] =
          channel_mse.value();
    }
  }

  out.wall_seconds = timer.seconds();
  return out;
}

}  // namespace phylab::experiments
