// SPDX-License-Identifier: Apache-2.0
//
// Desk-scale training of vanilla RNNs: softmax cross-entropy on the output at
// the final step, minibatch SGD, analytic backpropagation through time.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rnngen/cells.hpp"
#include "rnngen/data.hpp"

namespace rnngen {

/// M·(target/‖M‖₂). Throws InvalidInput for a zero M with positive target.
Matrix scale_spectral(const Matrix& M, double target);

struct TrainConfig {
  double learning_rate = 0.05;
  int epochs = 100;
  std::size_t batch_size = 16;
  /// Margin used for the logged ramp risk (never differentiated).
  double gamma = 0.5;
  /// When set, U is rescaled to this spectral norm after every epoch.
  std::optional<double> target_spectral_U;
  std::uint64_t seed = 0;
  std::size_t d_h = 8;
  /// Initial entries are uniform in [−s, s] with s = init_scale/√fan_in.
  double init_scale = 1.0;
  Activation sigma_h = Activation::tanh();
};

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  double ramp_risk = 0.0;
  double zero_one = 0.0;
  double B_U = 0.0;
};

struct TrainResult {
  Model model;
  std::vector<EpochLog> log;
  /// Set when the loss went non-finite; `model` is then the last finite state.
  bool diverged = false;
};

/// Mean cross-entropy of softmax(V h_T) against the final-step labels.
double surrogate_loss(const VanillaWeights& w, const Activation& sigma_h,
                      const SequenceDataset& data, std::span<const std::size_t> batch);

struct Gradients {
  Matrix U, V, W;
  double loss = 0.0;
};

/// Exact gradient of surrogate_loss by backpropagation through time.
Gradients bptt_gradients(const VanillaWeights& w, const Activation& sigma_h,
                         const SequenceDataset& data, std::span<const std::size_t> batch);

/// Random initialisation used by train_vanilla (exposed for tests).
VanillaWeights init_vanilla(std::size_t d_x, std::size_t d_h, std::size_t d_y, double scale,
                            std::uint64_t seed);

/// Trains from init_vanilla(d_x, cfg.d_h, K, ...). The log holds one entry
/// per epoch plus the initial state as epoch 0.
TrainResult train_vanilla(const SequenceDataset& data, const TrainConfig& cfg);

}  // namespace rnngen
