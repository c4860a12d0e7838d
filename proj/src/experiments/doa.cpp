// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "phylab/channel.hpp"
#include "phylab/classical.hpp"
#include "phylab/experiments.hpp"
#include "phylab/textcfg.hpp"
#include "src/experiments/exp_internal.hpp"

namespace phylab::experiments {
namespace {

channel::UlaConfig ula_of(const DoaEstimationConfig& cfg) {
  return {cfg.num_antennas, 0.5};
}

/// One snapshot of a unit source from theta: y = a(theta) + CN(0, sigma2).
void fill_snapshot_features(RealMatrix& features, Eigen::Index row, double theta_rad,
                            double sigma2, const channel::UlaConfig& ula, Rng& rng) {
  const ComplexVector a = channel::steering_vector(theta_rad, ula);
  const int n = ula.num_antennas;
  for (int i = 0; i < n; ++i) {
    const Complex y = a(i) + (sigma2 > 0.0 ? rng.complex_gaussian(sigma2) : Complex(0.0, 0.0));
    features(row, i) = y.real();
    features(row, n + i) = y.imag();
  }
}

}  // namespace

bool DoaEstimationConfig::apply(const std::string& key, const std::string& value) {
  if (sweep.apply(key, value) || train.apply(key, value)) return true;
  if (key == "num_antennas") {
    num_antennas = static_cast<int>(textcfg::parse_int(value));
  } else if (key == "domain_deg") {
    domain_deg = textcfg::parse_real(value);
  } else if (key == "grid_step_deg") {
    grid_step_deg = textcfg::parse_real(value);
  } else if (key == "music_grid_step_deg") {
    music_grid_step_deg = textcfg::parse_real(value);
  } else if (key == "music_snapshots") {
    music_snapshots = static_cast<int>(textcfg::parse_int(value));
  } else if (key == "train_snr_low_db") {
    train_snr_low_db = textcfg::parse_real(value);
  } else if (key == "train_snr_high_db") {
    train_snr_high_db = textcfg::parse_real(value);
  } else if (key == "train_clean_fraction") {
    train_clean_fraction = textcfg::parse_real(value);
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

void DoaEstimationConfig::validate() const {
  sweep.validate();
  train.validate();
  if (num_antennas < 2) throw std::invalid_argument("num_antennas must be >= 2");
  if (!(domain_deg > 0.0 && domain_deg <= 90.0))
    throw std::invalid_argument("domain_deg must be in (0, 90]");
  if (!(grid_step_deg > 0.0)) throw std::invalid_argument("grid_step_deg must be > 0");
  if (!(music_grid_step_deg > 0.0))
    throw std::invalid_argument("music_grid_step_deg must be > 0");
  if (music_snapshots < 1) throw std::invalid_argument("music_snapshots must be >= 1");
  if (!(train_snr_low_db <= train_snr_high_db))
    throw std::invalid_argument("train_snr_low_db must be <= train_snr_high_db");
  if (!(train_clean_fraction >= 0.0 && train_clean_fraction <= 1.0))
    throw std::invalid_argument("train_clean_fraction must be in [0, 1]");
  if (hidden1 < 1 || hidden2 < 1) throw std::invalid_argument("hidden widths must be >= 1");
  if (num_cells() < 2) throw std::invalid_argument("angle grid needs at least 2 cells");
}

int DoaEstimationConfig::num_cells() const {
  return static_cast<int>(std::lround(2.0 * domain_deg / grid_step_deg));
}

double DoaEstimationConfig::cell_center_deg(int cell) const {
  return -domain_deg + grid_step_deg * (cell + 0.5);
}

namespace detail {

nn::Dataset doa_examples(const DoaEstimationConfig& cfg, std::uint64_t seed,
                         std::int64_t count) {
  Rng rng(seed);
  const channel::UlaConfig ula = ula_of(cfg);
  const int cells = cfg.num_cells();
  nn::Dataset out;
  out.features.resize(count, 2 * cfg.num_antennas);
  out.labels = RealMatrix::Zero(count, cells);
  for (std::int64_t i = 0; i < count; ++i) {
    const int cell = rng.uniform_int(cells);
    const bool clean = rng.uniform() < cfg.train_clean_fraction;
    const double snr_db = rng.uniform(cfg.train_snr_low_db, cfg.train_snr_high_db);
    const double sigma2 = clean ? 0.0 : std::pow(10.0, -snr_db / 10.0);
    fill_snapshot_features(out.features, i, cfg.cell_center_deg(cell) * kPi / 180.0, sigma2,
                           ula, rng);
    out.labels(i, cell) = 1.0;
  }
  return out;
}

}  // namespace detail

SweepResult run_doa_estimation(const DoaEstimationConfig& cfg) {
  cfg.validate();
  const detail::Timer timer;
  const std::uint64_t master = cfg.sweep.master_seed;
  const channel::UlaConfig ula = ula_of(cfg);
  const int cells = cfg.num_cells();
  SweepResult out;
  out.experiment = "doa_estimation";
  out.master_seed = master;

  // Method ids: 0 = dnn, 1 = music.
  nn::Mlp mlp;
  if (cfg.include_dnn) {
    nn::MlpSpec spec;
    spec.layer_sizes = {2 * cfg.num_antennas, cfg.hidden1, cfg.hidden2, cells};
    spec.activations = {nn::Activation::ReLU, nn::Activation::ReLU, nn::Activation::Softmax};
    const nn::Dataset pool =
        detail::doa_examples(cfg, derive_seed(master, {detail::kSaltDataset, 0}),
                             cfg.train.train_examples + cfg.train.validation_examples);
    mlp = detail::fit_network(spec, nn::Loss::SoftmaxCrossEntropy, pool, cfg.train, master, 0,
                              &out.diagnostics["val_loss"]);
    out.models.push_back({"dnn", mlp});

    // Memorization check: noise-free snapshots from every training cell
    // center must land in their own cell.
    RealMatrix probes(cells, 2 * cfg.num_antennas);
    Rng unused(0);
    for (int c = 0; c < cells; ++c)
      fill_snapshot_features(probes, c, cfg.cell_center_deg(c) * kPi / 180.0, 0.0, ula, unused);
    const RealMatrix scores = nn::forward(mlp, probes.transpose()).activations.back();
    int correct = 0;
    for (int c = 0; c < cells; ++c) {
      Eigen::Index guess;
      scores.col(c).maxCoeff(&guess);
      correct += guess == c;
    }
    out.diagnostics["train_cell_accuracy"] =
        static_cast<double>(correct) / static_cast<double>(cells);
  }

  const std::int64_t trials = cfg.sweep.trials_per_point;
  if (cfg.include_dnn) {
    for (std::size_t si = 0; si < cfg.sweep.snr_grid_db.size(); ++si) {
      const double snr_db = cfg.sweep.snr_grid_db[si];
      const double sigma2 = std::pow(10.0, -snr_db / 10.0);
      metrics::MeanAccumulator mse;
      constexpr std::int64_t kChunk = 2048;
      RealMatrix features(kChunk, 2 * cfg.num_antennas);
      std::vector<double> truth_deg(kChunk);
      for (std::int64_t base = 0; base < trials; base += kChunk) {
        const std::int64_t m = std::min(kChunk, trials - base);
        for (std::int64_t c = 0; c < m; ++c) {
          Rng rng(derive_seed(master, {detail::kSaltEval, 0, si,
                                       static_cast<std::uint64_t>(base + c)}));
          const double theta_deg = rng.uniform(-cfg.domain_deg, cfg.domain_deg);
          truth_deg[static_cast<std::size_t>(c)] = theta_deg;
          fill_snapshot_features(features, c, theta_deg * kPi / 180.0, sigma2, ula, rng);
        }
        const RealMatrix scores =
            nn::forward(mlp, features.topRows(m).transpose()).activations.back();
        for (std::int64_t c = 0; c < m; ++c) {
          Eigen::Index guess;
          scores.col(c).maxCoeff(&guess);
          const double err =
              cfg.cell_center_deg(static_cast<int>(guess)) - truth_deg[static_cast<std::size_t>(c)];
          mse.add(err * err);
        }
      }
      detail::append_point(out, "dnn", snr_db, metrics::Metric::MseDeg2, mse.result());
    }
  }

  for (std::size_t si = 0; si < cfg.sweep.snr_grid_db.size(); ++si) {
    const double snr_db = cfg.sweep.snr_grid_db[si];
    const double sigma2 = std::pow(10.0, -snr_db / 10.0);
    metrics::MeanAccumulator mse;
    for (std::int64_t t = 0; t < trials; ++t) {
      Rng rng(derive_seed(master, {detail::kSaltEval, 1, si, static_cast<std::uint64_t>(t)}));
      const double theta_deg = rng.uniform(-cfg.domain_deg, cfg.domain_deg);
      const ComplexVector a = channel::steering_vector(theta_deg * kPi / 180.0, ula);
      ComplexMatrix snapshots(cfg.num_antennas, cfg.music_snapshots);
      for (int s = 0; s < cfg.music_snapshots; ++s) {
        const Complex source = rng.complex_gaussian(1.0);
        for (int i = 0; i < cfg.num_antennas; ++i)
          snapshots(i, s) = a(i) * source + rng.complex_gaussian(sigma2);
      }
      const auto est = classical::music_doa(snapshots, 1, ula, cfg.music_grid_step_deg);
      const double est_deg = est.degenerate ? 0.0 : est.angles_deg[0];
      const double err = est_deg - theta_deg;
      mse.add(err * err);
    }
    detail::append_point(out, "music", snr_db, metrics::Metric::MseDeg2, mse.result());
  }

  out.wall_seconds = timer.seconds();
  return out;
}

}  // namespace phylab::experiments
