// SPDX-License-Identifier: Apache-2.0
//
// Labeled sequence datasets and the synthetic generators used for desk-scale
// experiments.
#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "rnngen/cells.hpp"
#include "rnngen/margin.hpp"

namespace rnngen {

/// m labeled sequences of length T. Inputs satisfy ‖x_{i,t}‖₂ ≤ B_x and
/// labels are 1-based class indices in {1, ..., K}.
struct SequenceDataset {
  std::vector<Sequence> inputs;
  std::vector<std::vector<int>> labels;
  std::size_t d_x = 0;
  int K = 2;
  double B_x = 1.0;
  std::uint64_t seed = 0;

  std::size_t m() const noexcept { return inputs.size(); }
  std::size_t T() const noexcept { return inputs.empty() ? 0 : inputs.front().size(); }

  /// Throws InvalidInput when shapes, labels or the norm budget are violated.
  void validate() const;

  friend bool operator==(const SequenceDataset&, const SequenceDataset&) = default;
};

enum class LabelRule { teacher, running_sign };

std::string_view to_string(LabelRule rule);
LabelRule label_rule_from_string(std::string_view name);

struct SyntheticData {
  SequenceDataset data;
  /// The labelling network for LabelRule::teacher.
  std::optional<Model> teacher;
};

/// Samples Gaussian inputs rescaled into the ball of radius B_x and labels
/// them. `teacher` labels by the argmax output of a fixed random vanilla RNN;
/// `running_sign` labels by which of K equal-width bins tanh(s_t) falls in,
/// with s_t = Σ_{τ≤t} ⟨w, x_τ⟩ for a fixed w (for K = 2 this is the sign of
/// s_t). Inputs that land within 0.05 of a bin boundary are resampled.
SyntheticData gen_synthetic(std::size_t m, std::size_t T, std::size_t d_x, int K,
                            LabelRule rule, std::uint64_t seed, double B_x = 1.0);

/// Outputs at step t (1-based) paired with their labels.
std::vector<LabeledOutput> outputs_at(const Model& model, const SequenceDataset& data,
                                      std::size_t t);

/// First half / second half split (the first half gets the extra sequence).
std::pair<SequenceDataset, SequenceDataset> split_half(const SequenceDataset& data);

double max_input_norm(const SequenceDataset& data);

}  // namespace rnngen
