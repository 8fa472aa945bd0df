// SPDX-License-Identifier: Apache-2.0
//
// Functional margin, ramp loss and empirical risks for K-class outputs.
// Labels are 1-based: z ∈ {1, ..., K}.
#pragma once

#include <span>

#include "rnngen/linalg.hpp"

namespace rnngen {

struct LabeledOutput {
  Vector y;
  int z = 1;
};

/// y_z − max_{j≠z} y_j. Requires K ≥ 2 and 1 ≤ z ≤ K.
double margin(std::span<const double> y, int z);

/// 1 for a > 0, 1 + a/γ on [−γ, 0], 0 below −γ.
double ramp_loss(double a, double gamma);

/// Mean of ramp_loss(−margin(y_i, z_i), γ).
double empirical_ramp_risk(std::span<const LabeledOutput> outputs, double gamma);

/// Fraction of outputs whose argmax differs from the label. Ties at the top
/// count as errors.
double zero_one_error(std::span<const LabeledOutput> outputs);

}  // namespace rnngen
