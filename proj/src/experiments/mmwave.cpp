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

channel::SvChannelParams sv_params_of(const MmwavePrecodingConfig& cfg) {
  channel::SvChannelParams p;
  p.num_tx = cfg.num_tx;
  p.num_rx = cfg.num_rx;
  p.num_clusters = cfg.num_clusters;
  p.rays_per_cluster = cfg.rays_per_cluster;
  p.angle_spread_deg = cfg.angle_spread_deg;
  return p;
}

/// Successive decisions down a QR factorization of the effective channel:
/// the last stream is sliced first, its contribution removed, and so on up.
void qr_sic_labels(const ComplexMatrix& effective, const ComplexVector& y,
                   const classical::Constellation& qpsk, std::vector<int>& labels) {
  const Eigen::Index ns = effective.rows();
  const Eigen::HouseholderQR<ComplexMatrix> qr(effective);
  const ComplexMatrix q =
      qr.householderQ() * ComplexMatrix::Identity(effective.rows(), effective.cols());
  const ComplexMatrix r = q.adjoint() * effective;
  const ComplexVector z = q.adjoint() * y;
  ComplexVector decided(ns);
  for (Eigen::Index i = ns - 1; i >= 0; --i) {
    Complex acc = z(i);
    for (Eigen::Index j = i + 1; j < ns; ++j) acc -= r(i, j) * decided(j);
    const int label = qpsk.slice_label(acc / r(i, i));
    labels[static_cast<std::size_t>(i)] = label;
    decided(i) = qpsk.map_label(label);
  }
}

/// Analog phases of the alternating-minimization split, encoded as
/// (cos, sin) pairs over the column-major entries of f_rf.
void phase_targets(const ComplexMatrix& f_rf, RealMatrix& labels, Eigen::Index row) {
  const Eigen::Index entries = f_rf.size();
  const Complex* data = f_rf.data();
  for (Eigen::Index e = 0; e < entries; ++e) {
    const double phi = std::arg(data[e]);
    labels(row, e) = std::cos(phi);
    labels(row, entries + e) = std::sin(phi);
  }
}

}  // namespace

bool MmwavePrecodingConfig::apply(const std::string& key, const std::string& value) {
  if (sweep.apply(key, value) || train.apply(key, value)) return true;
  if (key == "num_tx") {
    num_tx = static_cast<int>(textcfg::parse_int(value));
  } else if (key == "num_rx") {
    num_rx = static_cast<int>(textcfg::parse_int(value));
  } else if (key == "num_streams") {
    num_streams = static_cast<int>(textcfg::parse_int(value));
  } else if (key == "num_rf_chains") {
    num_rf_chains = static_cast<int>(textcfg::parse_int(value));
  } else if (key == "num_clusters") {
    num_clusters = static_cast<int>(textcfg::parse_int(value));
  } else if (key == "rays_per_cluster") {
    rays_per_cluster = static_cast<int>(textcfg::parse_int(value));
  } else if (key == "angle_spread_deg") {
    angle_spread_deg = textcfg::parse_real(value);
  } else if (key == "altmin_iterations") {
    altmin_iterations = static_cast<int>(textcfg::parse_int(value));
  } else if (key == "data_vectors_per_trial") {
    data_vectors_per_trial = static_cast<int>(textcfg::parse_int(value));
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

void MmwavePrecodingConfig::validate() const {
  sweep.validate();
  train.validate();
  sv_params_of(*this).validate();
  if (num_streams < 1 || num_streams > std::min(num_tx, num_rx))
    throw std::invalid_argument("num_streams must be in [1, min(num_tx, num_rx)]");
  if (num_rf_chains < num_streams || num_rf_chains > num_tx)
    throw std::invalid_argument("num_rf_chains must be in [num_streams, num_tx]");
  if (altmin_iterations < 1) throw std::invalid_argument("altmin_iterations must be >= 1");
  if (data_vectors_per_trial < 1)
    throw std::invalid_argument("data_vectors_per_trial must be >= 1");
  if (hidden1 < 1 || hidden2 < 1) throw std::invalid_argument("hidden widths must be >= 1");
}

namespace detail {

nn::Dataset mmwave_examples(const MmwavePrecodingConfig& cfg, std::uint64_t seed,
                            std::int64_t count) {
  Rng rng(seed);
  const channel::SvChannelParams params = sv_params_of(cfg);
  const Eigen::Index channel_entries =
      static_cast<Eigen::Index>(cfg.num_tx) * static_cast<Eigen::Index>(cfg.num_rx);
  const Eigen::Index phase_entries =
      static_cast<Eigen::Index>(cfg.num_tx) * static_cast<Eigen::Index>(cfg.num_rf_chains);
  nn::Dataset out;
  out.features.resize(count, 2 * channel_entries);
  out.labels.resize(count, 2 * phase_entries);
  for (std::int64_t i = 0; i < count; ++i) {
    const ComplexMatrix h = channel::sample_sv_channel(params, rng).h;
    const Complex* data = h.data();
    for (Eigen::Index e = 0; e < channel_entries; ++e) {
      out.features(i, e) = data[e].real();
      out.features(i, channel_entries + e) = data[e].imag();
    }
    const ComplexMatrix f_opt = classical::gmd_precoder(h, cfg.num_streams).precoder;
    const auto split =
        classical::hybrid_decompose(f_opt, cfg.num_rf_chains, cfg.altmin_iterations);
    phase_targets(split.f_rf, out.labels, i);
  }
  return out;
}

}  // namespace detail

SweepResult run_mmwave_precoding(const MmwavePrecodingConfig& cfg) {
  cfg.validate();
  const detail::Timer timer;
  const std::uint64_t master = cfg.sweep.master_seed;
  const channel::SvChannelParams params = sv_params_of(cfg);
  const classical::Constellation qpsk(classical::ConstellationKind::QPSK);
  const int ns = cfg.num_streams;
  const double modulus = 1.0 / std::sqrt(static_cast<double>(cfg.num_tx));
  SweepResult out;
  out.experiment = "mmwave_precoding";
  out.master_seed = master;

  // Method ids, fixed order.
  enum MethodId : std::uint64_t {
    kSvdDigital = 0,
    kGmdDigital = 1,
    kSvdHybrid = 2,
    kGmdHybrid = 3,
    kDnnHybrid = 4,
  };
  struct Method {
    const char* name;
    std::uint64_t id;
  };
  std::vector<Method> methods = {{"svd_digital", kSvdDigital},
                                 {"gmd_digital", kGmdDigital},
                                 {"svd_hybrid", kSvdHybrid},
                                 {"gmd_hybrid", kGmdHybrid}};
  if (cfg.include_dnn) methods.push_back({"dnn_hybrid", kDnnHybrid});

  nn::Mlp mlp;
  if (cfg.include_dnn) {
    nn::MlpSpec spec;
    spec.layer_sizes = {2 * cfg.num_tx * cfg.num_rx, cfg.hidden1, cfg.hidden2,
                        2 * cfg.num_tx * cfg.num_rf_chains};
    spec.activations = {nn::Activation::ReLU, nn::Activation::ReLU, nn::Activation::Linear};
    const nn::Dataset pool =
        detail::mmwave_examples(cfg, derive_seed(master, {detail::kSaltDataset, 0}),
                                cfg.train.train_examples + cfg.train.validation_examples);
    mlp = detail::fit_network(spec, nn::Loss::MeanSquaredError, pool, cfg.train, master, 0,
                              &out.diagnostics["val_loss"]);
    out.models.push_back({"dnn_hybrid", mlp});
  }

  const std::int64_t trials = cfg.sweep.trials_per_point;
  const double noise_ref =
      static_cast<double>(cfg.num_tx) * static_cast<double>(cfg.num_rx) / ns;
  RealMatrix features(2 * cfg.num_tx * cfg.num_rx, 1);
  std::vector<int> labels(static_cast<std::size_t>(ns));

  for (const auto& method : methods) {
    for (std::size_t si = 0; si < cfg.sweep.snr_grid_db.size(); ++si) {
      const double snr_db = cfg.sweep.snr_grid_db[si];
      const double sigma2 = noise_ref * std::pow(10.0, -snr_db / 10.0);
      // All bits of a trial ride one channel draw; per-trial fractions give a
      // cluster-robust se.
      metrics::MeanAccumulator ber;
      const double bits_per_trial = 2.0 * ns * cfg.data_vectors_per_trial;
      for (std::int64_t t = 0; t < trials; ++t) {
        Rng rng(derive_seed(master, {detail::kSaltEval, method.id, si,
                                     static_cast<std::uint64_t>(t)}));
        const ComplexMatrix h = channel::sample_sv_channel(params, rng).h;

        ComplexMatrix precoder;   // num_tx x ns, ||.||_F^2 = ns
        ComplexMatrix combiner;   // ns x num_rx
        switch (method.id) {
          case kSvdDigital: {
            const auto pair = classical::svd_precoder(h, ns);
            precoder = pair.precoder;
            combiner = pair.combiner;
            break;
          }
          case kGmdDigital: {
            const auto pair = classical::gmd_precoder(h, ns);
            precoder = pair.precoder;
            combiner = pair.combiner;
            break;
          }
          case kSvdHybrid:
          case kGmdHybrid: {
            const auto pair = method.id == kSvdHybrid ? classical::svd_precoder(h, ns)
                                                      : classical::gmd_precoder(h, ns);
            const auto split = classical::hybrid_decompose(pair.precoder, cfg.num_rf_chains,
                                                           cfg.altmin_iterations);
            precoder = split.f_rf * split.f_bb;
            combiner = pair.combiner;
            break;
          }
          case kDnnHybrid: {
            const auto pair = classical::gmd_precoder(h, ns);
            const Complex* data = h.data();
            const Eigen::Index entries = h.size();
            for (Eigen::Index e = 0; e < entries; ++e) {
              features(e, 0) = data[e].real();
              features(entries + e, 0) = data[e].imag();
            }
            const RealMatrix predicted = nn::forward(mlp, features).activations.back();
            ComplexMatrix f_rf(cfg.num_tx, cfg.num_rf_chains);
            Complex* rf = f_rf.data();
            const Eigen::Index phases = f_rf.size();
            for (Eigen::Index e = 0; e < phases; ++e) {
              const double phi = std::atan2(predicted(phases + e, 0), predicted(e, 0));
              rf[e] = modulus * Complex(std::cos(phi), std::sin(phi));
            }
            ComplexMatrix f_bb =
                f_rf.completeOrthogonalDecomposition().solve(pair.precoder);
            const double power = (f_rf * f_bb).squaredNorm();
            f_bb *= std::sqrt(static_cast<double>(ns) / power);
            precoder = f_rf * f_bb;
            combiner = pair.combiner;
            break;
          }
          default:
            throw std::logic_error("unknown method");
        }

        const ComplexMatrix effective = combiner * h * precoder;
        int bit_errors = 0;
        for (int v = 0; v < cfg.data_vectors_per_trial; ++v) {
          ComplexVector x(ns);
          std::vector<int> want(static_cast<std::size_t>(ns));
          for (int s = 0; s < ns; ++s) {
            want[static_cast<std::size_t>(s)] = rng.uniform_int(qpsk.size());
            x(s) = qpsk.map_label(want[static_cast<std::size_t>(s)]);
          }
          ComplexVector y_rx = h * (precoder * x);
          for (int i = 0; i < cfg.num_rx; ++i) y_rx(i) += rng.complex_gaussian(sigma2);
          const ComplexVector y = combiner * y_rx;
          qr_sic_labels(effective, y, qpsk, labels);
          for (int s = 0; s < ns; ++s)
            bit_errors += detail::label_bit_errors(qpsk, want[static_cast<std::size_t>(s)],
                                                   labels[static_cast<std::size_t>(s)]);
        }
        ber.add(bit_errors / bits_per_trial);
      }
      detail::append_point(out, method.name, snr_db, metrics::Metric::BitErrorRate,
                           ber.result());
    }
  }

  out.wall_seconds = timer.seconds();
  return out;
}

}  // namespace phylab::experiments
