// SPDX-License-Identifier: Apache-2.0
#include "rnngen/margin.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "rnngen/errors.hpp"

namespace rnngen {

double margin(std::span<const double> y, int z) {
  const auto K = static_cast<int>(y.size());
  if (K < 2) throw InvalidInput("margin: need at least two classes");
  if (z < 1 || z > K) {
    throw InvalidInput("margin: label " + std::to_string(z) + " outside 1.." + std::to_string(K));
  }
  double best_other = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < K; ++j) {
    if (j != z - 1) best_other = std::max(best_other, y[j]);
  }
  return y[z - 1] - best_other;
}

double ramp_loss(double a, double gamma) {
  if (!(gamma > 0.0)) throw InvalidInput("ramp_loss: gamma must be positive");
  if (a > 0.0) return 1.0;
  if (a >= -gamma) return 1.0 + a / gamma;
  return 0.0;
}

double empirical_ramp_risk(std::span<const LabeledOutput> outputs, double gamma) {
  if (outputs.empty()) throw InvalidInput("empirical_ramp_risk: empty output list");
  double total = 0.0;
  for (const auto& o : outputs) total += ramp_loss(-margin(o.y, o.z), gamma);
  return total / static_cast<double>(outputs.size());
}

double zero_one_error(std::span<const LabeledOutput> outputs) {
  if (outputs.empty()) throw InvalidInput("zero_one_error: empty output list");
  std::size_t errors = 0;
  for (const auto& o : outputs) {
    if (!(margin(o.y, o.z) > 0.0)) ++errors;
  }
  return static_cast<double>(errors) / static_cast<double>(outputs.size());
}

}  // namespace rnngen
