// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "phylab/rng.hpp"
#include "phylab/types.hpp"

namespace phylab::nn {

enum class Activation { ReLU, Tanh, Linear, Softmax };
enum class Loss { MeanSquaredError, SoftmaxCrossEntropy };

enum class NoiseVarianceKind {
  Fixed,         // constant variance for every example
  UniformSnrDb,  // per-example: snr ~ U(lo, hi) dB, variance = mean(x^2) / 10^(snr/10)
};

/// In-network additive Gaussian noise applied to the output of hidden layer
/// `position` (0-based over hidden layers). The layer after it must also be
/// hidden. Noise is added during training (or when an evaluation explicitly
/// requests it); backward treats the realized noise as a constant, so the
/// gradient passes through unchanged.
struct NoiseLayerSpec {
  int position = 0;
  NoiseVarianceKind kind = NoiseVarianceKind::UniformSnrDb;
  double fixed_variance = 0.0;
  double snr_low_db = 0.0;
  double snr_high_db = 20.0;
};

struct MlpSpec {
  std::vector<int> layer_sizes;          // input..output widths
  std::vector<Activation> activations;   // one per weight layer
  std::optional<NoiseLayerSpec> noise_layer;

  int num_weight_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
  /// Throws std::invalid_argument unless: >= 2 layers, positive widths, one
  /// activation per weight layer, Softmax only at the output, and any noise
  /// layer sits between two hidden layers.
  void validate() const;
};

struct Mlp {
  MlpSpec spec;
  std::vector<RealMatrix> weights;  // weights[l]: layer_sizes[l+1] x layer_sizes[l]
  std::vector<RealVector> biases;   // biases[l]: layer_sizes[l+1]
};

/// Weights uniform on +-sqrt(6/(fan_in+fan_out)), biases zero, filled in
/// storage order so the result is bit-identical for a given seed.
Mlp init_xavier(const MlpSpec& spec, std::uint64_t seed);

struct ForwardOptions {
  bool training = false;  // enables the noise layer (needs rng)
  Rng* rng = nullptr;
  /// Evaluation-time channel noise at a fixed variance; overrides the spec's
  /// variance source and applies even when training is false.
  std::optional<double> noise_variance_override;
};

/// Batches are columns: input is (input_dim x batch).
struct ForwardTrace {
  std::vector<RealMatrix> activations;      // [0] = input, [l+1] = output of layer l
  std::vector<RealMatrix> pre_activations;  // [l] = affine output of layer l
};

ForwardTrace forward(const Mlp& mlp, const RealMatrix& input, const ForwardOptions& opts = {});

/// Forward pass over the weight-layer suffix [first_layer, end): `input`
/// feeds layer `first_layer` directly (rows = layer_sizes[first_layer]).
/// Lets an encoder/decoder split of one network run separately. The noise
/// layer fires only when its position lies inside the executed range.
ForwardTrace forward_range(const Mlp& mlp, const RealMatrix& input, int first_layer,
                           const ForwardOptions& opts = {});

/// Network output of a trace: the last post-activation matrix.
inline const RealMatrix& output_of(const ForwardTrace& trace) { return trace.activations.back(); }

struct LossGrad {
  double loss = 0.0;
  RealMatrix d_output;
};

/// MeanSquaredError: loss = (1/B) sum_b ||out_b - target_b||^2 over batch
/// columns, d_output = (2/B)(out - target), taken w.r.t. `output` = the
/// network output. SoftmaxCrossEntropy: `output` must be the output-layer
/// pre-activation (logits); softmax and cross-entropy are fused through a
/// log-sum-exp so the pair stays stable, d_output = (softmax - target)/B.
LossGrad loss_and_grad(const RealMatrix& output, const RealMatrix& target, Loss kind);

struct Gradients {
  std::vector<RealMatrix> d_weights;
  std::vector<RealVector> d_biases;
};

/// Backpropagation through the traced forward pass. d_output is the gradient
/// w.r.t. the network output; with fused_softmax_ce it is w.r.t. the output
/// pre-activation instead and the output activation derivative is skipped.
Gradients backward(const Mlp& mlp, const ForwardTrace& trace, const RealMatrix& d_output,
                   bool fused_softmax_ce = false);

struct TrainConfig {
  double learning_rate = 0.001;
  double momentum = 0.85;
  double weight_decay = 0.0001;
  int batch_size = 24;
  int num_iterations = 1000;
  Loss loss = Loss::MeanSquaredError;
  std::uint64_t seed = 1;
  int validation_interval = 0;  // 0 disables validation records

  void validate() const;  // lr > 0, momentum in [0,1), decay >= 0, batch >= 1
};

struct SgdState {
  std::vector<RealMatrix> w_velocity;
  std::vector<RealVector> b_velocity;
};

SgdState make_sgd_state(const Mlp& mlp);

/// v <- momentum*v - lr*(grad + weight_decay*param); param <- param + v.
/// Weight decay is not applied to biases.
void sgd_momentum_step(Mlp& mlp, const Gradients& grads, SgdState& state, const TrainConfig& cfg);

/// Examples are rows, matching on-disk dataset layout.
struct Dataset {
  RealMatrix features;  // examples x input_dim
  RealMatrix labels;    // examples x output_dim
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(int iteration, const std::string& what)
      : std::runtime_error(what), iteration(iteration) {}
  int iteration = 0;
};

struct TrainResult {
  std::vector<double> loss_history;        // one entry per iteration
  std::vector<double> validation_history;  // one entry per validation pass
};

/// Mini-batches are consecutive slices of a seeded Fisher-Yates permutation,
/// reshuffled each epoch; the same seed gives bit-identical training. A
/// non-finite loss aborts with TrainingDiverged carrying the iteration index.
TrainResult train(Mlp& mlp, const Dataset& train_data, const Dataset* validation,
                  const TrainConfig& cfg);

/// Analytic gradients for one batch on the deterministic path (noise layer
/// off). Shared by train and the checkers.
Gradients analytic_gradients(const Mlp& mlp, const RealMatrix& input, const RealMatrix& target,
                             Loss loss, double* loss_out = nullptr);

/// Five-point central differences with the given step on every parameter,
/// deterministic path. Exposed so a corrupted-backward negative control can
/// compare against it directly.
Gradients finite_difference_gradients(const Mlp& mlp, const RealMatrix& input,
                                      const RealMatrix& target, Loss loss, double step = 1e-5);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::vector<double> per_layer_max;  // per weight layer (weights and biases)
};

/// Relative error |a - n| / max(|a|, |n|, 1e-8) maximized over parameters.
GradCheckResult gradient_check(const Mlp& mlp, const RealMatrix& input, const RealMatrix& target,
                               Loss loss);

/// Versioned flat binary checkpoint, bit-exact round trip.
void save_checkpoint(const Mlp& mlp, const std::string& path);
Mlp load_checkpoint(const std::string& path);

}  // namespace phylab::nn
