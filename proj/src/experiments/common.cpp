// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <limits>
#include <stdexcept>

#include "phylab/experiments.hpp"
#include "phylab/textcfg.hpp"
#include "src/experiments/exp_internal.hpp"

namespace phylab::experiments {

bool SweepParams::apply(const std::string& key, const std::string& value) {
  if (key == "snr_grid_db") {
    snr_grid_db = textcfg::parse_real_list(value);
  } else if (key == "trials_per_point") {
    trials_per_point = textcfg::parse_int(value);
  } else if (key == "master_seed") {
    master_seed = textcfg::parse_uint(value);
  } else {
    return false;
  }
  return true;
}

void SweepParams::validate() const {
  if (snr_grid_db.empty()) throw std::invalid_argument("snr_grid_db must be nonempty");
  for (std::size_t i = 1; i < snr_grid_db.size(); ++i)
    if (!(snr_grid_db[i - 1] < snr_grid_db[i]))
      throw std::invalid_argument("snr_grid_db must be strictly increasing");
  if (trials_per_point < 1) throw std::invalid_argument("trials_per_point must be >= 1");
}

bool TrainParams::apply(const std::string& key, const std::string& value) {
  if (key == "train_examples") {
    train_examples = textcfg::parse_int(value);
  } else if (key == "validation_examples") {
    validation_examples = textcfg::parse_int(value);
  } else if (key == "train_iterations") {
    iterations = static_cast<int>(textcfg::parse_int(value));
  } else if (key == "batch_size") {
    batch_size = static_cast<int>(textcfg::parse_int(value));
  } else if (key == "learning_rate") {
    learning_rate = textcfg::parse_real(value);
  } else if (key == "momentum") {
    momentum = textcfg::parse_real(value);
  } else if (key == "weight_decay") {
    weight_decay = textcfg::parse_real(value);
  } else {
    return false;
  }
  return true;
}

void TrainParams::validate() const {
  if (train_examples < 1) throw std::invalid_argument("train_examples must be >= 1");
  if (validation_examples < 0) throw std::invalid_argument("validation_examples must be >= 0");
  if (iterations < 1) throw std::invalid_argument("train_iterations must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must be in [0,1)");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be >= 0");
}

const std::vector<ExperimentInfo>& experiment_catalog() {
  static const std::vector<ExperimentInfo> catalog = {
      {"ofdm_receiver",
       "OFDM frame detection: softmax symbol classifier vs LS estimation + zero-forcing under "
       "full pilots, a reduced pilot comb, and a removed cyclic prefix (BER vs SNR)"},
      {"noma_detection",
       "Two-user power-domain NOMA: joint-symbol classifier vs LS gains + successive "
       "cancellation at two pilot qualities (per-user BER and sum rate vs SNR)"},
      {"autoencoder_74",
       "(7,4) block-code autoencoder over an additive-noise bottleneck vs Hamming(7,4) "
       "hard-decision BPSK (BLER vs Eb/N0)"},
      {"doa_estimation",
       "Single-source direction finding on a uniform linear array: grid classifier vs subspace "
       "spectrum scan (squared-degree MSE vs SNR)"},
      {"gain_estimation",
       "Two-stage channel estimation (angle scan, then complex gain): least-squares gain vs "
       "learned residual correction, judged by maximum-ratio-combining BER vs SNR"},
      {"mmwave_precoding",
       "Millimeter-wave MIMO precoding: top-singular-vector and equal-diagonal precoders, their "
       "constant-modulus hybrid splits, and a learned analog-phase regressor (BER vs SNR)"},
  };
  return catalog;
}

namespace {

template <typename Config>
Config config_from_settings(const std::string& name, const KeyValueList& settings) {
  Config cfg;
  for (const auto& [key, value] : settings) {
    if (key == "dataset_variant") continue;  // consumed by generate_dataset
    bool known = false;
    try {
      known = cfg.apply(key, value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(name + "." + key, e.what());
    }
    if (!known) throw ConfigError(name + "." + key, "unknown key");
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(name, e.what());
  }
  return cfg;
}

std::string variant_setting(const KeyValueList& settings, const std::string& fallback) {
  for (const auto& [key, value] : settings)
    if (key == "dataset_variant") return textcfg::trim(value);
  return fallback;
}

}  // namespace

SweepResult run_named_experiment(const std::string& name, const KeyValueList& settings) {
  if (name == "ofdm_receiver")
    return run_ofdm_receiver(config_from_settings<OfdmReceiverConfig>(name, settings));
  if (name == "noma_detection")
    return run_noma_detection(config_from_settings<NomaDetectionConfig>(name, settings));
  if (name == "autoencoder_74")
    return run_autoencoder_74(config_from_settings<Autoencoder74Config>(name, settings));
  if (name == "doa_estimation")
    return run_doa_estimation(config_from_settings<DoaEstimationConfig>(name, settings));
  if (name == "gain_estimation")
    return run_gain_estimation(config_from_settings<GainEstimationConfig>(name, settings));
  if (name == "mmwave_precoding")
    return run_mmwave_precoding(config_from_settings<MmwavePrecodingConfig>(name, settings));
  throw ConfigError("experiment.name", "unknown experiment '" + name + "'");
}

std::uint64_t validate_named_experiment(const std::string& name, const KeyValueList& settings) {
  if (name == "ofdm_receiver")
    return config_from_settings<OfdmReceiverConfig>(name, settings).sweep.master_seed;
  if (name == "noma_detection")
    return config_from_settings<NomaDetectionConfig>(name, settings).sweep.master_seed;
  if (name == "autoencoder_74")
    return config_from_settings<Autoencoder74Config>(name, settings).sweep.master_seed;
  if (name == "doa_estimation")
    return config_from_settings<DoaEstimationConfig>(name, settings).sweep.master_seed;
  if (name == "gain_estimation")
    return config_from_settings<GainEstimationConfig>(name, settings).sweep.master_seed;
  if (name == "mmwave_precoding")
    return config_from_settings<MmwavePrecodingConfig>(name, settings).sweep.master_seed;
  throw ConfigError("experiment.name", "unknown experiment '" + name + "'");
}

SplitDataset generate_dataset(const std::string& name, const KeyValueList& settings,
                              std::int64_t train_count, std::int64_t validation_count,
                              std::int64_t test_count) {
  if (train_count < 1 || validation_count < 0 || test_count < 0)
    throw ConfigError("dataset.train", "split sizes must be positive (train) and nonnegative");
  const std::int64_t total = train_count + validation_count + test_count;

  nn::Dataset pool;
  std::uint64_t seed = 0;
  if (name == "ofdm_receiver") {
    const auto cfg = config_from_settings<OfdmReceiverConfig>(name, settings);
    const std::string variant = variant_setting(settings, "reduced");
    int setting = -1;
    if (variant == "full") setting = 0;
    if (variant == "reduced") setting = 1;
    if (variant == "nocp") setting = 2;
    if (setting < 0)
      throw ConfigError(name + ".dataset_variant", "expected full, reduced or nocp");
    seed = derive_seed(cfg.sweep.master_seed, {detail::kSaltDataset,
                                               static_cast<std::uint64_t>(setting)});
    pool = detail::ofdm_examples(cfg, setting, seed, total);
  } else if (name == "noma_detection") {
    const auto cfg = config_from_settings<NomaDetectionConfig>(name, settings);
    const std::string variant = variant_setting(settings, "hi");
    if (variant != "hi" && variant != "lo")
      throw ConfigError(name + ".dataset_variant", "expected hi or lo");
    const bool hi = variant == "hi";
    seed = derive_seed(cfg.sweep.master_seed, {detail::kSaltDataset, hi ? 0ull : 1ull});
    pool = detail::noma_examples(cfg, hi, seed, total);
  } else if (name == "autoencoder_74") {
    const auto cfg = config_from_settings<Autoencoder74Config>(name, settings);
    seed = derive_seed(cfg.sweep.master_seed, {detail::kSaltDataset, 0ull});
    pool = detail::autoencoder_examples(seed, total);
  } else if (name == "doa_estimation") {
    const auto cfg = config_from_settings<DoaEstimationConfig>(name, settings);
    seed = derive_seed(cfg.sweep.master_seed, {detail::kSaltDataset, 0ull});
    pool = detail::doa_examples(cfg, seed, total);
  } else if (name == "gain_estimation") {
    const auto cfg = config_from_settings<GainEstimationConfig>(name, settings);
    seed = derive_seed(cfg.sweep.master_seed, {detail::kSaltDataset, 0ull});
    pool = detail::gain_examples(cfg, seed, total);
  } else if (name == "mmwave_precoding") {
    const auto cfg = config_from_settings<MmwavePrecodingConfig>(name, settings);
    seed = derive_seed(cfg.sweep.master_seed, {detail::kSaltDataset, 0ull});
    pool = detail::mmwave_examples(cfg, seed, total);
  } else {
    throw ConfigError("experiment.name", "unknown experiment '" + name + "'");
  }
  return detail::split_pool(pool, train_count, validation_count, test_count, seed);
}

namespace detail {

void append_point(SweepResult& out, const std::string& method, double snr_db,
                  metrics::Metric metric, const metrics::MetricValue& v) {
  out.rows.push_back({method, snr_db, metric, v.value, v.standard_error, v.count});
}

nn::Dataset slice_examples(const nn::Dataset& pool, std::int64_t begin, std::int64_t count) {
  if (begin < 0 || count < 0 || begin + count > pool.features.rows())
    throw std::out_of_range("slice_examples: range outside pool");
  nn::Dataset out;
  out.features = pool.features.middleRows(begin, count);
  out.labels = pool.labels.middleRows(begin, count);
  return out;
}

SplitDataset split_pool(const nn::Dataset& pool, std::int64_t train_count,
                        std::int64_t validation_count, std::int64_t test_count,
                        std::uint64_t seed) {
  const std::int64_t total = train_count + validation_count + test_count;
  if (pool.features.rows() != total || pool.labels.rows() != total)
    throw std::logic_error("split_pool: pool size does not match the split sizes");

  // Index audit: the three ranges must partition [0, total) with no overlap.
  const std::int64_t begins[3] = {0, train_count, train_count + validation_count};
  const std::int64_t counts[3] = {train_count, validation_count, test_count};
  std::int64_t covered = 0;
  for (int i = 0; i < 3; ++i) {
    if (begins[i] != covered) throw std::logic_error("split_pool: split ranges overlap or gap");
    covered += counts[i];
  }
  if (covered != total) throw std::logic_error("split_pool: split ranges do not cover the pool");

  SplitDataset out;
  out.train = slice_examples(pool, begins[0], counts[0]);
  out.validation = slice_examples(pool, begins[1], counts[1]);
  out.test = slice_examples(pool, begins[2], counts[2]);
  out.seed = seed;
  return out;
}

nn::Mlp fit_network(const nn::MlpSpec& spec, nn::Loss loss, const nn::Dataset& pool,
                    const TrainParams& tp, std::uint64_t master, std::uint64_t net_id,
                    double* final_validation_loss) {
  if (pool.features.rows() != tp.train_examples + tp.validation_examples)
    throw std::logic_error("fit_network: pool size != train + validation examples");
  const nn::Dataset train_split = slice_examples(pool, 0, tp.train_examples);
  const nn::Dataset val_split = slice_examples(pool, tp.train_examples, tp.validation_examples);

  nn::Mlp mlp = nn::init_xavier(spec, derive_seed(master, {kSaltTrain, net_id, 0}));
  nn::TrainConfig tc;
  tc.learning_rate = tp.learning_rate;
  tc.momentum = tp.momentum;
  tc.weight_decay = tp.weight_decay;
  tc.batch_size = static_cast<int>(std::min<std::int64_t>(tp.batch_size, tp.train_examples));
  tc.num_iterations = tp.iterations;
  tc.loss = loss;
  tc.seed = derive_seed(master, {kSaltTrain, net_id, 1});
  tc.validation_interval = tp.validation_examples > 0 ? std::max(1, tp.iterations / 10) : 0;
  const nn::TrainResult history =
      nn::train(mlp, train_split, tp.validation_examples > 0 ? &val_split : nullptr, tc);
  if (final_validation_loss != nullptr)
    *final_validation_loss = history.validation_history.empty()
                                 ? std::numeric_limits<double>::quiet_NaN()
                                 : history.validation_history.back();
  return mlp;
}

}  // namespace detail
}  // namespace phylab::experiments
