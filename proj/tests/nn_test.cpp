// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "phylab/nn.hpp"

using namespace phylab;
using namespace phylab::nn;

namespace {

MlpSpec make_spec(std::vector<int> sizes, std::vector<Activation> acts) {
  MlpSpec spec;
  spec.layer_sizes = std::move(sizes);
  spec.activations = std::move(acts);
  return spec;
}

RealMatrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  RealMatrix m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = rng.gaussian();
  return m;
}

bool identical_params(const Mlp& a, const Mlp& b) {
  if (a.weights.size() != b.weights.size()) return false;
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    if ((a.weights[l].array() != b.weights[l].array()).any()) return false;
    if ((a.biases[l].array() != b.biases[l].array()).any()) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("xavier init: zero biases, matched variance, deterministic") {
  const MlpSpec spec = make_spec({512, 512}, {Activation::Linear});
  const Mlp mlp = init_xavier(spec, 42);
  CHECK(mlp.biases[0].cwiseAbs().maxCoeff() == 0.0);
  const double mean = mlp.weights[0].mean();
  const double var = (mlp.weights[0].array() - mean).square().mean();
  CHECK(var == doctest::Approx(2.0 / 1024.0).epsilon(0.05));
  const Mlp again = init_xavier(spec, 42);
  CHECK(identical_params(mlp, again));
  const Mlp other = init_xavier(spec, 43);
  CHECK_FALSE(identical_params(mlp, other));
}

TEST_CASE("spec validation rejects malformed networks") {
  CHECK_THROWS_AS(make_spec({4}, {}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(make_spec({4, 2}, {}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(make_spec({4, 0, 2}, {Activation::ReLU, Activation::Linear}).validate(),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      make_spec({4, 4, 2}, {Activation::Softmax, Activation::Linear}).validate(),
      std::invalid_argument);

  MlpSpec noisy = make_spec({4, 8, 8, 2}, {Activation::ReLU, Activation::ReLU, Activation::Linear});
  noisy.noise_layer = NoiseLayerSpec{};
  noisy.noise_layer->position = 0;
  CHECK_NOTHROW(noisy.validate());  // noisy hidden 0 feeds hidden 1
  noisy.noise_layer->position = 1;  // would feed the output layer
  CHECK_THROWS_AS(noisy.validate(), std::invalid_argument);

  MlpSpec shallow = make_spec({4, 8, 2}, {Activation::ReLU, Activation::Linear});
  shallow.noise_layer = NoiseLayerSpec{};
  shallow.noise_layer->position = 0;
  CHECK_THROWS_AS(shallow.validate(), std::invalid_argument);
}

TEST_CASE("forward closed forms") {
  // Zero parameters, linear output: everything is zero.
  Mlp zero = init_xavier(make_spec({3, 2}, {Activation::Linear}), 1);
  zero.weights[0].setZero();
  Rng rng(7);
  const RealMatrix x = random_matrix(rng, 3, 5);
  CHECK(output_of(forward(zero, x)).cwiseAbs().maxCoeff() == 0.0);

  // A single linear layer is a plain affine map.
  Mlp affine = init_xavier(make_spec({3, 2}, {Activation::Linear}), 2);
  affine.biases[0] << 0.5, -1.0;
  const RealMatrix expect = (affine.weights[0] * x).colwise() + affine.biases[0];
  CHECK((output_of(forward(affine, x)) - expect).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("softmax outputs live on the probability simplex") {
  const Mlp mlp = init_xavier(
      make_spec({6, 12, 4}, {Activation::Tanh, Activation::Softmax}), 11);
  Rng rng(13);
  const RealMatrix out = output_of(forward(mlp, random_matrix(rng, 6, 9)));
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    CHECK(std::abs(out.col(c).sum() - 1.0) <= 1e-12);
    CHECK(out.col(c).minCoeff() >= 0.0);
  }
}

TEST_CASE("loss closed forms") {
  Rng rng(3);
  const RealMatrix y = random_matrix(rng, 4, 6);
  const LossGrad zero = loss_and_grad(y, y, Loss::MeanSquaredError);
  CHECK(zero.loss == 0.0);
  CHECK(zero.d_output.cwiseAbs().maxCoeff() == 0.0);

  // Equal logits over 4 classes: cross-entropy is ln 4 for any one-hot target.
  RealMatrix logits = RealMatrix::Constant(4, 3, 0.7);
  RealMatrix target = RealMatrix::Zero(4, 3);
  target(0, 0) = target(1, 1) = target(2, 2) = 1.0;
  const LossGrad ce = loss_and_grad(logits, target, Loss::SoftmaxCrossEntropy);
  CHECK(ce.loss == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("single linear layer gradient matches the closed form") {
  Mlp mlp = init_xavier(make_spec({3, 2}, {Activation::Linear}), 5);
  Rng rng(6);
  const RealMatrix x = random_matrix(rng, 3, 4);
  const RealMatrix y = random_matrix(rng, 2, 4);
  const Gradients grads = analytic_gradients(mlp, x, y, Loss::MeanSquaredError);
  const RealMatrix err = ((mlp.weights[0] * x).colwise() + mlp.biases[0]) - y;
  const RealMatrix dw = (2.0 / 4.0) * err * x.transpose();
  CHECK((grads.d_weights[0] - dw).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((grads.d_biases[0] - (2.0 / 4.0) * err.rowwise().sum()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("relu dead units get zero gradient") {
  Mlp mlp = init_xavier(make_spec({2, 2, 1}, {Activation::ReLU, Activation::Linear}), 8);
  mlp.weights[0] << 1.0, 0.0, -1.0, 0.0;  // unit 1 sees -x0
  RealMatrix x(2, 1);
  x << 2.0, 0.0;  // pre-activations: (2, -2), unit 1 dead
  RealMatrix y(1, 1);
  y << 5.0;
  const Gradients grads = analytic_gradients(mlp, x, y, Loss::MeanSquaredError);
  CHECK(grads.d_weights[0].row(1).cwiseAbs().maxCoeff() == 0.0);
  CHECK(grads.d_biases[0](1) == 0.0);
  CHECK(grads.d_weights[0].row(0).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("gradient check passes for every activation and loss pairing") {
  struct Combo {
    std::vector<Activation> acts;
    Loss loss;
    std::uint64_t seed;
  };
  const std::vector<Combo> combos = {
      {{Activation::ReLU, Activation::ReLU, Activation::Linear}, Loss::MeanSquaredError, 21},
      {{Activation::Tanh, Activation::Tanh, Activation::Linear}, Loss::MeanSquaredError, 22},
      {{Activation::Tanh, Activation::ReLU, Activation::Tanh}, Loss::MeanSquaredError, 23},
      {{Activation::ReLU, Activation::Tanh, Activation::Softmax}, Loss::SoftmaxCrossEntropy, 24},
      {{Activation::Tanh, Activation::Tanh, Activation::Softmax}, Loss::MeanSquaredError, 25},
  };
  for (const Combo& combo : combos) {
    const Mlp mlp = init_xavier(make_spec({3, 6, 5, 4}, combo.acts), combo.seed);
    Rng rng(combo.seed + 100);
    const RealMatrix x = random_matrix(rng, 3, 5);
    RealMatrix y;
    if (combo.loss == Loss::SoftmaxCrossEntropy ||
        combo.acts.back() == Activation::Softmax) {
      y = RealMatrix::Zero(4, 5);
      for (int c = 0; c < 5; ++c) y(static_cast<int>(rng.uniform_int(4)), c) = 1.0;
    } else {
      y = random_matrix(rng, 4, 5);
    }
    const GradCheckResult check = gradient_check(mlp, x, y, combo.loss);
    CHECK(check.max_rel_error <= 1e-6);
    CHECK(check.per_layer_max.size() == 3);
  }
}

TEST_CASE("sabotaged backward is caught by the finite-difference oracle") {
  const Mlp mlp = init_xavier(
      make_spec({3, 5, 2}, {Activation::Tanh, Activation::Linear}), 31);
  Rng rng(32);
  const RealMatrix x = random_matrix(rng, 3, 4);
  const RealMatrix y = random_matrix(rng, 2, 4);
  Gradients analytic = analytic_gradients(mlp, x, y, Loss::MeanSquaredError);
  analytic.d_weights[0] = -analytic.d_weights[0];  // sign-flip sabotage
  const Gradients numeric = finite_difference_gradients(mlp, x, y, Loss::MeanSquaredError);
  double worst = 0.0;
  for (Eigen::Index k = 0; k < analytic.d_weights[0].size(); ++k) {
    const double a = analytic.d_weights[0].data()[k], n = numeric.d_weights[0].data()[k];
    worst = std::max(worst, std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8}));
  }
  CHECK(worst > 1e-2);
}

TEST_CASE("sgd closed forms") {
  TrainConfig cfg;
  cfg.learning_rate = 0.5;
  cfg.momentum = 0.0;
  cfg.weight_decay = 0.0;

  Mlp mlp = init_xavier(make_spec({1, 1}, {Activation::Linear}), 3);
  mlp.weights[0](0, 0) = 2.0;
  SgdState state = make_sgd_state(mlp);
  Gradients grads;
  grads.d_weights.push_back(RealMatrix::Constant(1, 1, 3.0));
  grads.d_biases.push_back(RealVector::Zero(1));
  sgd_momentum_step(mlp, grads, state, cfg);
  CHECK(mlp.weights[0](0, 0) == doctest::Approx(2.0 - 0.5 * 3.0).epsilon(1e-15));

  // Zero gradient with preloaded velocity still moves by momentum * v.
  cfg.momentum = 0.9;
  state.w_velocity[0](0, 0) = 1.0;
  grads.d_weights[0](0, 0) = 0.0;
  const double before = mlp.weights[0](0, 0);
  sgd_momentum_step(mlp, grads, state, cfg);
  CHECK(mlp.weights[0](0, 0) == doctest::Approx(before + 0.9).epsilon(1e-15));
}

TEST_CASE("momentum descent on a quadratic bowl matches the scalar recurrence") {
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.momentum = 0.85;
  cfg.weight_decay = 0.0;
  Mlp mlp = init_xavier(make_spec({1, 1}, {Activation::Linear}), 4);
  mlp.weights[0](0, 0) = 1.0;
  SgdState state = make_sgd_state(mlp);
  double w_oracle = 1.0, v_oracle = 0.0;
  int converged_at = -1;
  for (int step = 0; step < 500; ++step) {
    Gradients grads;
    grads.d_weights.push_back(RealMatrix::Constant(1, 1, 2.0 * mlp.weights[0](0, 0)));
    grads.d_biases.push_back(RealVector::Zero(1));
    sgd_momentum_step(mlp, grads, state, cfg);
    v_oracle = cfg.momentum * v_oracle - cfg.learning_rate * 2.0 * w_oracle;
    w_oracle += v_oracle;
    REQUIRE(mlp.weights[0](0, 0) == doctest::Approx(w_oracle).epsilon(1e-12));
    if (converged_at < 0 && std::abs(mlp.weights[0](0, 0)) <= 1e-6) converged_at = step;
  }
  CHECK(converged_at >= 0);
  CHECK(std::abs(mlp.weights[0](0, 0)) <= 1e-6);
}

TEST_CASE("training learns xor and is reproducible") {
  Dataset data;
  data.features.resize(4, 2);
  data.features << 0, 0, 0, 1, 1, 0, 1, 1;
  data.labels.resize(4, 2);  // class 0: xor=0, class 1: xor=1
  data.labels << 1, 0, 0, 1, 0, 1, 1, 0;

  TrainConfig cfg;
  cfg.learning_rate = 0.3;
  cfg.momentum = 0.9;
  cfg.weight_decay = 0.0;
  cfg.batch_size = 4;
  cfg.num_iterations = 5000;
  cfg.loss = Loss::SoftmaxCrossEntropy;
  cfg.seed = 7;

  Mlp mlp = init_xavier(make_spec({2, 8, 2}, {Activation::Tanh, Activation::Softmax}), 7);
  const TrainResult result = train(mlp, data, nullptr, cfg);
  CHECK(result.loss_history.size() == 5000);
  const RealMatrix out = output_of(forward(mlp, data.features.transpose()));
  for (int i = 0; i < 4; ++i) {
    Eigen::Index pred, truth;
    out.col(i).maxCoeff(&pred);
    data.labels.row(i).maxCoeff(&truth);
    CHECK(pred == truth);
  }

  // Bit-identical rerun.
  Mlp twin = init_xavier(make_spec({2, 8, 2}, {Activation::Tanh, Activation::Softmax}), 7);
  train(twin, data, nullptr, cfg);
  CHECK(identical_params(mlp, twin));
}

TEST_CASE("validation history records at the configured interval") {
  Rng rng(40);
  Dataset data;
  data.features = random_matrix(rng, 32, 3);
  data.labels = data.features.rowwise().sum();
  Dataset val = data;
  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.batch_size = 8;
  cfg.num_iterations = 50;
  cfg.validation_interval = 10;
  cfg.seed = 4;
  Mlp mlp = init_xavier(make_spec({3, 4, 1}, {Activation::Tanh, Activation::Linear}), 12);
  const TrainResult result = train(mlp, data, &val, cfg);
  CHECK(result.loss_history.size() == 50);
  CHECK(result.validation_history.size() == 5);
}

TEST_CASE("divergent training aborts with the iteration index") {
  Dataset data;
  data.features = RealMatrix::Constant(2, 1, 1.0);
  data.labels = RealMatrix::Zero(2, 1);
  TrainConfig cfg;
  cfg.learning_rate = 1e9;
  cfg.momentum = 0.0;
  cfg.weight_decay = 0.0;
  cfg.batch_size = 2;
  cfg.num_iterations = 1000;
  cfg.seed = 1;
  Mlp mlp = init_xavier(make_spec({1, 1}, {Activation::Linear}), 9);
  mlp.weights[0](0, 0) = 1.0;
  bool thrown = false;
  try {
    train(mlp, data, nullptr, cfg);
  } catch (const TrainingDiverged& e) {
    thrown = true;
    CHECK(e.iteration > 0);
    CHECK(std::string(e.what()).find(std::to_string(e.iteration)) != std::string::npos);
  }
  CHECK(thrown);
}

TEST_CASE("noise layer: train-time statistics, eval identity, override") {
  MlpSpec spec = make_spec({4, 8, 8, 2},
                           {Activation::Tanh, Activation::Tanh, Activation::Linear});
  spec.noise_layer = NoiseLayerSpec{};
  spec.noise_layer->position = 0;
  spec.noise_layer->kind = NoiseVarianceKind::Fixed;
  spec.noise_layer->fixed_variance = 0.25;
  const Mlp mlp = init_xavier(spec, 50);
  Rng data_rng(51);
  const RealMatrix x = random_matrix(data_rng, 4, 100);
  const ForwardTrace clean = forward(mlp, x);

  Rng noise_rng(52);
  ForwardOptions train_opts;
  train_opts.training = true;
  train_opts.rng = &noise_rng;
  double acc = 0.0;
  int count = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const ForwardTrace noisy = forward(mlp, x, train_opts);
    const RealMatrix diff = noisy.activations[1] - clean.activations[1];
    acc += diff.array().square().sum();
    count += static_cast<int>(diff.size());
  }
  CHECK(acc / count == doctest::Approx(0.25).epsilon(0.05));

  // Evaluation without an override is exactly the clean path.
  const ForwardTrace eval = forward(mlp, x);
  CHECK((output_of(eval) - output_of(clean)).cwiseAbs().maxCoeff() == 0.0);

  // Evaluation with an override injects noise at the requested variance.
  Rng override_rng(53);
  ForwardOptions eval_noise;
  eval_noise.rng = &override_rng;
  eval_noise.noise_variance_override = 0.09;
  acc = 0.0;
  count = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const ForwardTrace noisy = forward(mlp, x, eval_noise);
    const RealMatrix diff = noisy.activations[1] - clean.activations[1];
    acc += diff.array().square().sum();
    count += static_cast<int>(diff.size());
  }
  CHECK(acc / count == doctest::Approx(0.09).epsilon(0.05));
}

TEST_CASE("per-example snr noise scales with the example energy") {
  MlpSpec spec = make_spec({4, 8, 8, 2},
                           {Activation::Linear, Activation::Tanh, Activation::Linear});
  spec.noise_layer = NoiseLayerSpec{};
  spec.noise_layer->position = 0;
  spec.noise_layer->kind = NoiseVarianceKind::UniformSnrDb;
  spec.noise_layer->snr_low_db = 10.0;
  spec.noise_layer->snr_high_db = 10.0;  // degenerate range pins the variance
  const Mlp mlp = init_xavier(spec, 60);
  Rng data_rng(61);
  RealMatrix x = random_matrix(data_rng, 4, 2);
  x.col(1) = 10.0 * x.col(0);

  Rng noise_rng(62);
  ForwardOptions opts;
  opts.training = true;
  opts.rng = &noise_rng;
  const ForwardTrace clean = forward(mlp, x);
  double acc0 = 0.0, acc1 = 0.0;
  for (int rep = 0; rep < 4000; ++rep) {
    const ForwardTrace noisy = forward(mlp, x, opts);
    const RealMatrix diff = noisy.activations[1] - clean.activations[1];
    acc0 += diff.col(0).squaredNorm();
    acc1 += diff.col(1).squaredNorm();
  }
  const double var0 = acc0 / (4000.0 * 8.0), var1 = acc1 / (4000.0 * 8.0);
  const double expect0 = clean.activations[1].col(0).squaredNorm() / 8.0 / 10.0;
  CHECK(var0 == doctest::Approx(expect0).epsilon(0.1));
  CHECK(var1 / var0 == doctest::Approx(100.0).epsilon(0.1));
}

TEST_CASE("noise-free autoencoder memorizes all sixteen messages") {
  Dataset data;
  data.features = RealMatrix::Identity(16, 16);
  data.labels = RealMatrix::Identity(16, 16);
  TrainConfig cfg;
  cfg.learning_rate = 0.5;
  cfg.momentum = 0.9;
  cfg.weight_decay = 0.0;
  cfg.batch_size = 16;
  cfg.num_iterations = 3000;
  cfg.loss = Loss::SoftmaxCrossEntropy;
  cfg.seed = 71;
  Mlp mlp = init_xavier(
      make_spec({16, 32, 7, 32, 16},
                {Activation::Tanh, Activation::Linear, Activation::Tanh, Activation::Softmax}),
      71);
  train(mlp, data, nullptr, cfg);
  const RealMatrix out = output_of(forward(mlp, data.features.transpose()));
  int correct = 0;
  for (int i = 0; i < 16; ++i) {
    Eigen::Index pred;
    out.col(i).maxCoeff(&pred);
    correct += pred == i;
  }
  CHECK(correct == 16);
}

TEST_CASE("checkpoint round trip is bit exact") {
  MlpSpec spec = make_spec({5, 9, 8, 3},
                           {Activation::ReLU, Activation::Tanh, Activation::Softmax});
  spec.noise_layer = NoiseLayerSpec{};
  spec.noise_layer->position = 0;
  spec.noise_layer->kind = NoiseVarianceKind::UniformSnrDb;
  spec.noise_layer->snr_low_db = 2.0;
  spec.noise_layer->snr_high_db = 18.0;
  const Mlp mlp = init_xavier(spec, 90);

  const std::string path_a = "nn_test_ckpt_a.bin", path_b = "nn_test_ckpt_b.bin";
  save_checkpoint(mlp, path_a);
  const Mlp loaded = load_checkpoint(path_a);
  CHECK(identical_params(mlp, loaded));
  CHECK(loaded.spec.layer_sizes == mlp.spec.layer_sizes);
  CHECK(loaded.spec.activations == mlp.spec.activations);
  REQUIRE(loaded.spec.noise_layer.has_value());
  CHECK(loaded.spec.noise_layer->position == 0);
  CHECK(loaded.spec.noise_layer->snr_high_db == 18.0);

  save_checkpoint(loaded, path_b);
  std::ifstream fa(path_a, std::ios::binary), fb(path_b, std::ios::binary);
  std::stringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  CHECK(sa.str() == sb.str());
  CHECK(!sa.str().empty());
  std::remove(path_a.c_str());
  std::remove(path_b.c_str());

  CHECK_THROWS_AS(load_checkpoint("nn_test_missing.bin"), std::runtime_error);
}

TEST_CASE("forward_range splits agree with the full pass") {
  MlpSpec spec = make_spec({4, 10, 8, 6, 3},
                           {Activation::ReLU, Activation::Tanh, Activation::ReLU,
                            Activation::Linear});
  const Mlp mlp = init_xavier(spec, 31);
  Rng rng(77);
  const RealMatrix x = random_matrix(rng, 4, 9);

  const ForwardTrace full = forward(mlp, x);
  const ForwardTrace from_zero = forward_range(mlp, x, 0);
  CHECK((output_of(full).array() == output_of(from_zero).array()).all());

  // Encoder/decoder split at every interior seam reproduces the full output.
  for (int cut = 1; cut < mlp.spec.num_weight_layers(); ++cut) {
    const ForwardTrace tail = forward_range(mlp, full.activations[cut], cut);
    CHECK((output_of(tail).array() - output_of(full).array()).abs().maxCoeff() == 0.0);
  }
}
