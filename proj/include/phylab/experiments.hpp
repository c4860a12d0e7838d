// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "phylab/metrics.hpp"
#include "phylab/nn.hpp"
#include "phylab/types.hpp"

namespace phylab::experiments {

/// One (method, snr) measurement of a sweep.
struct SweepRow {
  std::string method;
  double snr_db = 0.0;
  metrics::Metric metric = metrics::Metric::BitErrorRate;
  double value = 0.0;
  double standard_error = 0.0;
  std::int64_t trials = 0;
};

/// Full sweep output. Row order is fixed per experiment (methods in catalog
/// order, SNR ascending within a method) so serialization is reproducible.
/// diagnostics carries named side measurements for trend checks; it is not
/// part of the CSV.
/// A network trained during a run, exported so callers can checkpoint it.
struct NamedModel {
  std::string name;
  nn::Mlp model;
};

struct SweepResult {
  std::string experiment;
  std::vector<SweepRow> rows;
  std::uint64_t master_seed = 0;
  double wall_seconds = 0.0;
  std::map<std::string, double> diagnostics;
  std::vector<NamedModel> models;  // empty when learned arms are disabled
};

/// Sweep axis shared by every experiment.
struct SweepParams {
  std::vector<double> snr_grid_db;
  std::int64_t trials_per_point = 0;
  std::uint64_t master_seed = 1;

  /// Consumes snr_grid_db / trials_per_point / master_seed keys.
  bool apply(const std::string& key, const std::string& value);
  void validate() const;  // grid nonempty and strictly increasing, trials >= 1
};

/// Network training budget shared by the learning arms.
struct TrainParams {
  std::int64_t train_examples = 0;
  std::int64_t validation_examples = 0;
  int iterations = 0;
  int batch_size = 0;
  double learning_rate = 0.0;
  double momentum = 0.9;
  double weight_decay = 0.0;

  bool apply(const std::string& key, const std::string& value);
  void validate() const;
};

// ---------------------------------------------------------------------------

/// OFDM link with a two-symbol frame (pilot symbol then data symbol) over
/// fresh random multipath per frame. Three settings run side by side: full
/// pilot comb, reduced comb, and full comb with the cyclic prefix removed.
/// Per setting, a softmax classifier over the data constellation at
/// judged_subcarrier is trained on received-frame features and compared with
/// LS estimation + zero-forcing at the same subcarrier. Methods:
/// {dnn,lszf}_{full,reduced,nocp}; metric BER.
struct OfdmReceiverConfig {
  SweepParams sweep{{0.0, 5.0, 10.0, 15.0, 20.0, 25.0}, 20000, 0xB00C01};
  int num_subcarriers = 16;
  int cp_length = 4;
  int num_taps = 3;
  int reduced_pilot_spacing = 2;  // must divide num_subcarriers
  int judged_subcarrier = 3;      // data subcarrier both methods are scored on
  double train_snr_low_db = 0.0;  // per-example noise level range for training
  double train_snr_high_db = 25.0;
  int hidden1 = 128;
  int hidden2 = 64;
  bool include_dnn = true;
  /// Calibration knobs: flat_unit_channel swaps the random taps for a unit
  /// impulse (plain AWGN), genie_csi hands the baseline the true response.
  bool flat_unit_channel = false;
  bool genie_csi = false;
  TrainParams train{40000, 4000, 12000, 128, 0.05, 0.9, 1e-5};

  bool apply(const std::string& key, const std::string& value);
  void validate() const;
};

SweepResult run_ofdm_receiver(const OfdmReceiverConfig& cfg);

// ---------------------------------------------------------------------------

/// Two-user power-domain uplink NOMA over block fading, one data symbol per
/// block, time-multiplexed unit pilots. Channel-state quality is the pilot
/// SNR; a high and a low quality run side by side. The learned receiver maps
/// (data observation, both pilot observations) to the joint symbol pair; the
/// baseline is least-squares gains + successive cancellation. Methods:
/// {dnn,sic_ls}_{hi,lo}_u{1,2} and sic_perfect_u{1,2} for BER,
/// {sic_perfect,sic_ls_hi,sic_ls_lo} for sum rate (estimation error counted
/// as extra noise).
struct NomaDetectionConfig {
  SweepParams sweep{{0.0, 4.0, 8.0, 12.0, 16.0, 20.0}, 20000, 0x70A2};
  double power_strong = 0.8;  // weak user gets 1 - power_strong
  double pilot_snr_hi_db = 20.0;
  double pilot_snr_lo_db = 5.0;
  int hidden1 = 64;
  int hidden2 = 32;
  bool include_dnn = true;
  TrainParams train{60000, 6000, 15000, 128, 0.05, 0.9, 1e-5};

  bool apply(const std::string& key, const std::string& value);
  void validate() const;
};

SweepResult run_noma_detection(const NomaDetectionConfig& cfg);

// ---------------------------------------------------------------------------

/// (7,4) block-code autoencoder: one-hot message in, 7 real channel uses
/// through an additive-noise bottleneck, softmax message out. The sweep axis
/// is Eb/N0; evaluation draws noise per codeword at the variance matching the
/// grid point with energy accounted per codeword. Reference curve: Hamming
/// (7,4) + BPSK with hard-decision decoding. Methods {autoencoder,
/// hamming_hard}; metric BLER.
struct Autoencoder74Config {
  SweepParams sweep{{0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0}, 200000, 0xAE74};
  int hidden = 32;
  double train_ebn0_low_db = 0.0;
  double train_ebn0_high_db = 12.0;
  TrainParams train{20000, 2000, 50000, 64, 0.02, 0.9, 0.0};

  bool apply(const std::string& key, const std::string& value);
  void validate() const;
};

SweepResult run_autoencoder_74(const Autoencoder74Config& cfg);

// ---------------------------------------------------------------------------

/// Single-source direction finding on a uniform linear array, cast as
/// classification over a uniform angle grid inside |theta| <= domain_deg.
/// The network sees one snapshot (real/imag per antenna) and predicts the
/// cell; the estimate is the cell center. The subspace baseline scans its
/// own finer grid over multiple snapshots. Methods {dnn, music}; metric mean
/// squared error in squared degrees against continuous truth angles.
struct DoaEstimationConfig {
  SweepParams sweep{{0.0, 5.0, 10.0, 15.0, 20.0}, 2000, 0xD0A};
  int num_antennas = 16;
  double domain_deg = 60.0;     // truth angles drawn uniform in +-domain_deg
  double grid_step_deg = 1.0;   // classifier cell width
  double music_grid_step_deg = 0.1;
  int music_snapshots = 16;
  double train_snr_low_db = 0.0;
  double train_snr_high_db = 20.0;
  double train_clean_fraction = 0.1;  // share of noise-free training examples
  int hidden1 = 128;
  int hidden2 = 64;
  bool include_dnn = true;
  TrainParams train{36000, 3600, 12000, 128, 0.05, 0.9, 1e-5};

  bool apply(const std::string& key, const std::string& value);
  void validate() const;
  int num_cells() const;
  double cell_center_deg(int cell) const;
};

SweepResult run_doa_estimation(const DoaEstimationConfig& cfg);

// ---------------------------------------------------------------------------

/// Two-stage uplink channel estimation for h = g * a(theta): the arrival
/// angle comes from the subspace scan over the pilot snapshots, the complex
/// gain from least squares, and the learned arm refines the gain with a
/// network predicting the normalized residual (g - g_ls)/sigma from
/// (Re g_ls, Im g_ls, sigma). Both pilot and data run at the sweep SNR.
/// Downstream metric: QPSK BER after maximum-ratio combining with the
/// reconstructed channel. Methods {mrc_perfect, mrc_ls, mrc_dnn}; channel
/// estimation MSE per SNR lands in diagnostics.
struct GainEstimationConfig {
  SweepParams sweep{{-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0}, 2000, 0x6A13};
  int num_antennas = 16;
  double domain_deg = 60.0;
  int pilot_snapshots = 16;
  double music_grid_step_deg = 0.1;
  int data_symbols_per_trial = 10;
  double train_snr_low_db = -10.0;
  double train_snr_high_db = 30.0;
  int hidden = 32;
  bool include_dnn = true;
  TrainParams train{30000, 3000, 8000, 128, 0.03, 0.9, 0.0};

  bool apply(const std::string& key, const std::string& value);
  void validate() const;
};

SweepResult run_gain_estimation(const GainEstimationConfig& cfg);

// ---------------------------------------------------------------------------

/// Clustered millimeter-wave MIMO precoding shoot-out. Per channel draw:
/// top-singular-vector and equal-diagonal (triangular) precoders, their
/// constant-modulus hybrid splits, and optionally a network that regresses
/// the analog phases from channel features (digital stage refit by least
/// squares). All receivers decide streams by QR-assisted successive
/// cancellation on the true effective channel. Methods {svd_digital,
/// gmd_digital, svd_hybrid, gmd_hybrid, dnn_hybrid}; metric BER over
/// per-stream QPSK.
struct MmwavePrecodingConfig {
  SweepParams sweep{{-10.0, -5.0, 0.0, 5.0, 10.0, 15.0}, 2000, 0x3A7E};
  int num_tx = 16;
  int num_rx = 4;
  int num_streams = 2;
  int num_rf_chains = 4;
  int num_clusters = 3;
  int rays_per_cluster = 4;
  double angle_spread_deg = 7.5;
  int altmin_iterations = 30;
  int data_vectors_per_trial = 10;
  int hidden1 = 256;
  int hidden2 = 128;
  bool include_dnn = true;
  TrainParams train{12000, 1200, 12000, 100, 0.02, 0.9, 1e-5};

  bool apply(const std::string& key, const std::string& value);
  void validate() const;
};

SweepResult run_mmwave_precoding(const MmwavePrecodingConfig& cfg);

// ---------------------------------------------------------------------------

struct ExperimentInfo {
  std::string name;
  std::string description;
};

/// The six experiments in their canonical (stable) order.
const std::vector<ExperimentInfo>& experiment_catalog();

using KeyValueList = std::vector<std::pair<std::string, std::string>>;

/// Config-shaped failure: carries the offending key path ("section.key").
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key_path, const std::string& message)
      : std::runtime_error(key_path + ": " + message), key_path(std::move(key_path)) {}
  std::string key_path;
};

/// Applies `settings` (keys as they appear inside the experiment's config
/// section) onto the named experiment's defaults and runs it. Unknown keys
/// and malformed values raise ConfigError.
SweepResult run_named_experiment(const std::string& name, const KeyValueList& settings);

/// Applies and validates `settings` without running anything. Returns the
/// resolved master seed so callers can record it up front. Throws the same
/// ConfigError a run would.
std::uint64_t validate_named_experiment(const std::string& name, const KeyValueList& settings);

/// Train/validation/test example blocks cut from one generated pool.
struct SplitDataset {
  nn::Dataset train;
  nn::Dataset validation;
  nn::Dataset test;
  std::uint64_t seed = 0;
};

/// Builds the named experiment's supervised training examples (the same
/// generator its runner trains on; where an experiment trains several
/// networks, the `dataset_variant` config key picks which one). Splits are
/// consecutive disjoint index ranges of a single pool; the partition is
/// audited before returning.
SplitDataset generate_dataset(const std::string& name, const KeyValueList& settings,
                              std::int64_t train_count, std::int64_t validation_count,
                              std::int64_t test_count);

}  // namespace phylab::experiments
