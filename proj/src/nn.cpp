// SPDX-License-Identifier: Apache-2.0
#include "phylab/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>

namespace phylab::nn {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

RealMatrix apply_activation(Activation act, const RealMatrix& z) {
  switch (act) {
    case Activation::ReLU:
      return z.cwiseMax(0.0);
    case Activation::Tanh:
      return z.array().tanh().matrix();
    case Activation::Linear:
      return z;
    case Activation::Softmax: {
      RealMatrix p(z.rows(), z.cols());
      for (Eigen::Index c = 0; c < z.cols(); ++c) {
        const double m = z.col(c).maxCoeff();
        Eigen::ArrayXd e = (z.col(c).array() - m).exp();
        p.col(c) = (e / e.sum()).matrix();
      }
      return p;
    }
  }
  throw std::logic_error("unreachable activation");
}

// d_pre = gradient w.r.t. the affine output, given gradient w.r.t. the
// post-activation output and the traced values.
RealMatrix activation_backward(Activation act, const RealMatrix& pre, const RealMatrix& post,
                               const RealMatrix& d_post) {
  switch (act) {
    case Activation::ReLU:
      return (pre.array() > 0.0).select(d_post, RealMatrix::Zero(pre.rows(), pre.cols()));
    case Activation::Tanh:
      return (d_post.array() * (1.0 - post.array().square())).matrix();
    case Activation::Linear:
      return d_post;
    case Activation::Softmax: {
      // Full Jacobian: d_pre = p .* (g - <g, p>) column-wise.
      RealMatrix d_pre(pre.rows(), pre.cols());
      for (Eigen::Index c = 0; c < pre.cols(); ++c) {
        const double dot = d_post.col(c).dot(post.col(c));
        d_pre.col(c) = (post.col(c).array() * (d_post.col(c).array() - dot)).matrix();
      }
      return d_pre;
    }
  }
  throw std::logic_error("unreachable activation");
}

}  // namespace

void MlpSpec::validate() const {
  require(layer_sizes.size() >= 2, "MlpSpec: need at least input and output layers");
  for (int s : layer_sizes) require(s >= 1, "MlpSpec: layer sizes must be positive");
  require(activations.size() == layer_sizes.size() - 1,
          "MlpSpec: need one activation per weight layer");
  for (std::size_t l = 0; l + 1 < activations.size(); ++l)
    require(activations[l] != Activation::Softmax, "MlpSpec: Softmax is only valid at the output");
  if (noise_layer) {
    const int num_hidden = num_weight_layers() - 1;
    // The noisy output must feed another hidden layer, not the output layer.
    require(noise_layer->position >= 0 && noise_layer->position <= num_hidden - 2,
            "MlpSpec: noise layer must sit between two hidden layers");
    if (noise_layer->kind == NoiseVarianceKind::Fixed)
      require(noise_layer->fixed_variance >= 0.0, "MlpSpec: noise variance must be >= 0");
    else
      require(noise_layer->snr_low_db <= noise_layer->snr_high_db,
              "MlpSpec: noise snr range must be ordered");
  }
}

Mlp init_xavier(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  Mlp mlp;
  mlp.spec = spec;
  Rng rng(seed);
  for (int l = 0; l < spec.num_weight_layers(); ++l) {
    const int fan_in = spec.layer_sizes[static_cast<std::size_t>(l)];
    const int fan_out = spec.layer_sizes[static_cast<std::size_t>(l) + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    RealMatrix w(fan_out, fan_in);
    for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = rng.uniform(-limit, limit);
    mlp.weights.push_back(std::move(w));
    mlp.biases.push_back(RealVector::Zero(fan_out));
  }
  return mlp;
}

ForwardTrace forward(const Mlp& mlp, const RealMatrix& input, const ForwardOptions& opts) {
  return forward_range(mlp, input, 0, opts);
}

ForwardTrace forward_range(const Mlp& mlp, const RealMatrix& input, int first_layer,
                           const ForwardOptions& opts) {
  const int num_layers = mlp.spec.num_weight_layers();
  require(first_layer >= 0 && first_layer < num_layers, "forward_range: first_layer out of range");
  require(input.rows() == mlp.spec.layer_sizes[static_cast<std::size_t>(first_layer)],
          "forward: input dimension mismatch");
  const bool noise_wanted =
      mlp.spec.noise_layer && mlp.spec.noise_layer->position >= first_layer &&
      (opts.training || opts.noise_variance_override.has_value());
  if (noise_wanted) require(opts.rng != nullptr, "forward: noise layer needs an rng");

  ForwardTrace trace;
  trace.activations.reserve(static_cast<std::size_t>(num_layers - first_layer) + 1);
  trace.pre_activations.reserve(static_cast<std::size_t>(num_layers - first_layer));
  trace.activations.push_back(input);
  for (int l = first_layer; l < num_layers; ++l) {
    RealMatrix z = mlp.weights[static_cast<std::size_t>(l)] * trace.activations.back();
    z.colwise() += mlp.biases[static_cast<std::size_t>(l)];
    trace.pre_activations.push_back(z);
    RealMatrix a = apply_activation(mlp.spec.activations[static_cast<std::size_t>(l)], z);
    if (noise_wanted && l == mlp.spec.noise_layer->position) {
      const NoiseLayerSpec& nl = *mlp.spec.noise_layer;
      for (Eigen::Index c = 0; c < a.cols(); ++c) {
        double variance;
        if (opts.noise_variance_override) {
          variance = *opts.noise_variance_override;
        } else if (nl.kind == NoiseVarianceKind::Fixed) {
          variance = nl.fixed_variance;
        } else {
          const double snr_db = opts.rng->uniform(nl.snr_low_db, nl.snr_high_db);
          variance = a.col(c).squaredNorm() / static_cast<double>(a.rows()) /
                     std::pow(10.0, snr_db / 10.0);
        }
        const double sd = std::sqrt(variance);
        for (Eigen::Index r = 0; r < a.rows(); ++r) a(r, c) += opts.rng->gaussian(0.0, sd);
      }
    }
    trace.activations.push_back(std::move(a));
  }
  return trace;
}

LossGrad loss_and_grad(const RealMatrix& output, const RealMatrix& target, Loss kind) {
  require(output.rows() == target.rows() && output.cols() == target.cols(),
          "loss_and_grad: shape mismatch");
  const double batch = static_cast<double>(output.cols());
  LossGrad lg;
  if (kind == Loss::MeanSquaredError) {
    const RealMatrix err = output - target;
    lg.loss = err.squaredNorm() / batch;
    lg.d_output = (2.0 / batch) * err;
    return lg;
  }
  // Softmax cross-entropy on logits via log-sum-exp.
  lg.d_output.resize(output.rows(), output.cols());
  double total = 0.0;
  for (Eigen::Index c = 0; c < output.cols(); ++c) {
    const double m = output.col(c).maxCoeff();
    const Eigen::ArrayXd shifted = output.col(c).array() - m;
    const double lse = std::log(shifted.exp().sum());
    total -= (target.col(c).array() * (shifted - lse)).sum();
    lg.d_output.col(c) = ((shifted - lse).exp() - target.col(c).array()).matrix() / batch;
  }
  lg.loss = total / batch;
  return lg;
}

Gradients backward(const Mlp& mlp, const ForwardTrace& trace, const RealMatrix& d_output,
                   bool fused_softmax_ce) {
  const int num_layers = mlp.spec.num_weight_layers();
  require(trace.activations.size() == static_cast<std::size_t>(num_layers) + 1,
          "backward: trace does not cover the whole network");
  Gradients grads;
  grads.d_weights.resize(static_cast<std::size_t>(num_layers));
  grads.d_biases.resize(static_cast<std::size_t>(num_layers));
  RealMatrix delta = d_output;
  for (int l = num_layers - 1; l >= 0; --l) {
    const auto lu = static_cast<std::size_t>(l);
    if (l != num_layers - 1 || !fused_softmax_ce)
      delta = activation_backward(mlp.spec.activations[lu], trace.pre_activations[lu],
                                  trace.activations[lu + 1], delta);
    grads.d_weights[lu] = delta * trace.activations[lu].transpose();
    grads.d_biases[lu] = delta.rowwise().sum();
    if (l > 0) delta = mlp.weights[lu].transpose() * delta;
  }
  return grads;
}

void TrainConfig::validate() const {
  require(learning_rate > 0.0, "TrainConfig: learning_rate must be > 0");
  require(momentum >= 0.0 && momentum < 1.0, "TrainConfig: momentum must be in [0,1)");
  require(weight_decay >= 0.0, "TrainConfig: weight_decay must be >= 0");
  require(batch_size >= 1, "TrainConfig: batch_size must be >= 1");
  require(num_iterations >= 1, "TrainConfig: num_iterations must be >= 1");
}

SgdState make_sgd_state(const Mlp& mlp) {
  SgdState state;
  for (const RealMatrix& w : mlp.weights)
    state.w_velocity.push_back(RealMatrix::Zero(w.rows(), w.cols()));
  for (const RealVector& b : mlp.biases) state.b_velocity.push_back(RealVector::Zero(b.size()));
  return state;
}

void sgd_momentum_step(Mlp& mlp, const Gradients& grads, SgdState& state, const TrainConfig& cfg) {
  for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
    state.w_velocity[l] = cfg.momentum * state.w_velocity[l] -
                          cfg.learning_rate * (grads.d_weights[l] + cfg.weight_decay * mlp.weights[l]);
    mlp.weights[l] += state.w_velocity[l];
    state.b_velocity[l] = cfg.momentum * state.b_velocity[l] - cfg.learning_rate * grads.d_biases[l];
    mlp.biases[l] += state.b_velocity[l];
  }
}

namespace {

// Mean loss over a dataset on the deterministic path, in fixed-size slabs.
double dataset_loss(const Mlp& mlp, const Dataset& data, Loss loss) {
  const Eigen::Index n = data.features.rows();
  const Eigen::Index slab = 256;
  double total = 0.0;
  const bool fused =
      loss == Loss::SoftmaxCrossEntropy && mlp.spec.activations.back() == Activation::Softmax;
  for (Eigen::Index start = 0; start < n; start += slab) {
    const Eigen::Index count = std::min(slab, n - start);
    const RealMatrix batch = data.features.middleRows(start, count).transpose();
    const RealMatrix target = data.labels.middleRows(start, count).transpose();
    const ForwardTrace trace = forward(mlp, batch);
    const RealMatrix& out = fused ? trace.pre_activations.back() : output_of(trace);
    total += loss_and_grad(out, target, loss).loss * static_cast<double>(count);
  }
  return total / static_cast<double>(n);
}

}  // namespace

TrainResult train(Mlp& mlp, const Dataset& train_data, const Dataset* validation,
                  const TrainConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = train_data.features.rows();
  require(n >= 1, "train: empty dataset");
  require(cfg.batch_size <= n, "train: batch_size exceeds dataset size");
  require(train_data.features.rows() == train_data.labels.rows(),
          "train: features/labels row mismatch");
  require(train_data.features.cols() == mlp.spec.layer_sizes.front(),
          "train: feature dimension mismatch");
  require(train_data.labels.cols() == mlp.spec.layer_sizes.back(),
          "train: label dimension mismatch");

  const bool fused =
      cfg.loss == Loss::SoftmaxCrossEntropy && mlp.spec.activations.back() == Activation::Softmax;
  Rng rng(cfg.seed);
  SgdState state = make_sgd_state(mlp);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Eigen::Index cursor = n;  // forces a shuffle before the first batch

  TrainResult result;
  result.loss_history.reserve(static_cast<std::size_t>(cfg.num_iterations));
  RealMatrix batch(mlp.spec.layer_sizes.front(), cfg.batch_size);
  RealMatrix target(mlp.spec.layer_sizes.back(), cfg.batch_size);
  ForwardOptions opts;
  opts.training = true;
  opts.rng = &rng;

  for (int it = 0; it < cfg.num_iterations; ++it) {
    if (cursor + cfg.batch_size > n) {
      for (Eigen::Index i = n - 1; i > 0; --i)
        std::swap(order[static_cast<std::size_t>(i)],
                  order[static_cast<std::size_t>(rng.uniform_int(i + 1))]);
      cursor = 0;
    }
    for (int b = 0; b < cfg.batch_size; ++b) {
      const Eigen::Index row = order[static_cast<std::size_t>(cursor + b)];
      batch.col(b) = train_data.features.row(row).transpose();
      target.col(b) = train_data.labels.row(row).transpose();
    }
    cursor += cfg.batch_size;

    const ForwardTrace trace = forward(mlp, batch, opts);
    const RealMatrix& out = fused ? trace.pre_activations.back() : output_of(trace);
    const LossGrad lg = loss_and_grad(out, target, cfg.loss);
    if (!std::isfinite(lg.loss))
      throw TrainingDiverged(it, "training loss is not finite at iteration " + std::to_string(it));
    result.loss_history.push_back(lg.loss);
    const Gradients grads = backward(mlp, trace, lg.d_output, fused);
    sgd_momentum_step(mlp, grads, state, cfg);

    if (validation && cfg.validation_interval > 0 && (it + 1) % cfg.validation_interval == 0)
      result.validation_history.push_back(dataset_loss(mlp, *validation, cfg.loss));
  }
  return result;
}

Gradients analytic_gradients(const Mlp& mlp, const RealMatrix& input, const RealMatrix& target,
                             Loss loss, double* loss_out) {
  const bool fused =
      loss == Loss::SoftmaxCrossEntropy && mlp.spec.activations.back() == Activation::Softmax;
  const ForwardTrace trace = forward(mlp, input);
  const RealMatrix& out = fused ? trace.pre_activations.back() : output_of(trace);
  const LossGrad lg = loss_and_grad(out, target, loss);
  if (loss_out) *loss_out = lg.loss;
  return backward(mlp, trace, lg.d_output, fused);
}

namespace {

double loss_at(const Mlp& mlp, const RealMatrix& input, const RealMatrix& target, Loss loss) {
  const bool fused =
      loss == Loss::SoftmaxCrossEntropy && mlp.spec.activations.back() == Activation::Softmax;
  const ForwardTrace trace = forward(mlp, input);
  const RealMatrix& out = fused ? trace.pre_activations.back() : output_of(trace);
  return loss_and_grad(out, target, loss).loss;
}

}  // namespace

Gradients finite_difference_gradients(const Mlp& mlp, const RealMatrix& input,
                                      const RealMatrix& target, Loss loss, double step) {
  Mlp probe = mlp;
  // Five-point stencil: O(step^4) truncation lets the step sit far above the
  // double-precision roundoff floor, so even parameters with tiny gradients
  // are certified to 1e-6 relative accuracy.
  const auto derivative = [&](double& p) {
    const double saved = p;
    const auto at = [&](double offset) {
      p = saved + offset;
      return loss_at(probe, input, target, loss);
    };
    // Paired differences cancel exactly when a perturbation leaves the loss
    // untouched (dead path), avoiding a spurious non-associativity residual.
    const double d = (8.0 * (at(step) - at(-step)) - (at(2.0 * step) - at(-2.0 * step))) /
                     (12.0 * step);
    p = saved;
    return d;
  };
  Gradients grads;
  for (std::size_t l = 0; l < probe.weights.size(); ++l) {
    RealMatrix dw(probe.weights[l].rows(), probe.weights[l].cols());
    for (Eigen::Index k = 0; k < dw.size(); ++k)
      dw.data()[k] = derivative(probe.weights[l].data()[k]);
    grads.d_weights.push_back(std::move(dw));
    RealVector db(probe.biases[l].size());
    for (Eigen::Index k = 0; k < db.size(); ++k) db(k) = derivative(probe.biases[l](k));
    grads.d_biases.push_back(std::move(db));
  }
  return grads;
}

GradCheckResult gradient_check(const Mlp& mlp, const RealMatrix& input, const RealMatrix& target,
                               Loss loss) {
  // Step tradeoff: piecewise-linear nets need a short stencil reach so no
  // ReLU kink is crossed; smooth nets need a long step so roundoff stays far
  // below the tiny-gradient entries tanh saturation produces.
  bool has_relu = false;
  for (Activation a : mlp.spec.activations) has_relu |= a == Activation::ReLU;
  const double step = has_relu ? 3e-5 : 1e-4;
  const Gradients analytic = analytic_gradients(mlp, input, target, loss);
  const Gradients numeric = finite_difference_gradients(mlp, input, target, loss, step);
  GradCheckResult result;
  auto rel = [](double a, double n) {
    return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8});
  };
  for (std::size_t l = 0; l < analytic.d_weights.size(); ++l) {
    double layer_max = 0.0;
    for (Eigen::Index k = 0; k < analytic.d_weights[l].size(); ++k)
      layer_max = std::max(layer_max,
                           rel(analytic.d_weights[l].data()[k], numeric.d_weights[l].data()[k]));
    for (Eigen::Index k = 0; k < analytic.d_biases[l].size(); ++k)
      layer_max = std::max(layer_max, rel(analytic.d_biases[l](k), numeric.d_biases[l](k)));
    result.per_layer_max.push_back(layer_max);
    result.max_rel_error = std::max(result.max_rel_error, layer_max);
  }
  return result;
}

namespace {

constexpr char kMagic[8] = {'P', 'H', 'Y', 'N', 'E', 'T', '0', '1'};

template <typename T>
void write_pod(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
void read_pod(std::ifstream& in, T& value) {
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
}

}  // namespace

void save_checkpoint(const Mlp& mlp, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out.write(kMagic, sizeof(kMagic));
  const std::int32_t num_sizes = static_cast<std::int32_t>(mlp.spec.layer_sizes.size());
  write_pod(out, num_sizes);
  for (int s : mlp.spec.layer_sizes) write_pod(out, static_cast<std::int32_t>(s));
  for (Activation a : mlp.spec.activations) write_pod(out, static_cast<std::int32_t>(a));
  const std::int32_t has_noise = mlp.spec.noise_layer ? 1 : 0;
  write_pod(out, has_noise);
  if (mlp.spec.noise_layer) {
    write_pod(out, static_cast<std::int32_t>(mlp.spec.noise_layer->position));
    write_pod(out, static_cast<std::int32_t>(mlp.spec.noise_layer->kind));
    write_pod(out, mlp.spec.noise_layer->fixed_variance);
    write_pod(out, mlp.spec.noise_layer->snr_low_db);
    write_pod(out, mlp.spec.noise_layer->snr_high_db);
  }
  for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
    out.write(reinterpret_cast<const char*>(mlp.weights[l].data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(mlp.weights[l].size())));
    out.write(reinterpret_cast<const char*>(mlp.biases[l].data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(mlp.biases[l].size())));
  }
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

Mlp load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("load_checkpoint: bad magic in " + path);
  std::int32_t num_sizes = 0;
  read_pod(in, num_sizes);
  if (!in || num_sizes < 2 || num_sizes > 1024)
    throw std::runtime_error("load_checkpoint: corrupt header in " + path);
  MlpSpec spec;
  for (std::int32_t i = 0; i < num_sizes; ++i) {
    std::int32_t s = 0;
    read_pod(in, s);
    spec.layer_sizes.push_back(s);
  }
  for (std::int32_t i = 0; i + 1 < num_sizes; ++i) {
    std::int32_t a = 0;
    read_pod(in, a);
    spec.activations.push_back(static_cast<Activation>(a));
  }
  std::int32_t has_noise = 0;
  read_pod(in, has_noise);
  if (has_noise) {
    NoiseLayerSpec nl;
    std::int32_t position = 0, kind = 0;
    read_pod(in, position);
    read_pod(in, kind);
    read_pod(in, nl.fixed_variance);
    read_pod(in, nl.snr_low_db);
    read_pod(in, nl.snr_high_db);
    nl.position = position;
    nl.kind = static_cast<NoiseVarianceKind>(kind);
    spec.noise_layer = nl;
  }
  spec.validate();
  Mlp mlp;
  mlp.spec = spec;
  for (int l = 0; l < spec.num_weight_layers(); ++l) {
    RealMatrix w(spec.layer_sizes[static_cast<std::size_t>(l) + 1],
                 spec.layer_sizes[static_cast<std::size_t>(l)]);
    in.read(reinterpret_cast<char*>(w.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(w.size())));
    RealVector b(spec.layer_sizes[static_cast<std::size_t>(l) + 1]);
    in.read(reinterpret_cast<char*>(b.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(b.size())));
    mlp.weights.push_back(std::move(w));
    mlp.biases.push_back(std::move(b));
  }
  if (!in) throw std::runtime_error("load_checkpoint: truncated file " + path);
  return mlp;
}

}  // namespace phylab::nn
