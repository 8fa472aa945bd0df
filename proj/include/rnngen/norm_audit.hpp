// SPDX-License-Identifier: Apache-2.0
//
// Norm quantities consumed by the bounds, gate statistics for MGU/LSTM and
// assumption checks.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rnngen/cells.hpp"
#include "rnngen/data.hpp"

namespace rnngen {

struct MatrixNorms {
  std::string name;
  std::size_t rows = 0, cols = 0;
  double spectral = 0.0;   // B_•
  double frobenius = 0.0;  // B_{•,F}
  double two_one = 0.0;    // M_•

  /// ‖M‖_F / ‖M‖₂ (unsquared); 1 for the zero matrix.
  double stable_rank() const;
  /// ‖M‖_{2,1} / ‖M‖_F; 1 for the zero matrix.
  double two_one_over_frobenius() const;
};

MatrixNorms measure(std::string name, const Matrix& m);

/// Data-conditional gate statistics: maxima over the gate values observed on
/// the audited sample only.
struct GateStats {
  double beta = 0.0;
  double theta = 0.0;
};

struct NormProfile {
  CellType cell = CellType::vanilla;
  Dims dims;
  std::vector<MatrixNorms> matrices;
  /// √(d_x d_h + d_h² + d_h d_y) for vanilla, max{d_x, d_y, d_h} for gated
  /// cells, the data dimension for conv.
  double width = 0.0;
  /// Conv filter count.
  std::size_t k = 0;
  double B_x = 1.0;
  std::optional<GateStats> gates;

  bool has(std::string_view name) const;
  /// Throws InvalidInput naming the missing matrix.
  const MatrixNorms& at(std::string_view name) const;
};

NormProfile audit(const Model& model);
/// Same, with B_x taken from the dataset's declared budget and gate stats
/// filled for MGU/LSTM.
NormProfile audit(const Model& model, const SequenceDataset& data);

/// Vanilla profile from norm values alone (no weights), e.g. for parameter
/// sweeps. Frobenius and (2,1) entries start equal to the spectral value;
/// overwrite them as needed.
NormProfile vanilla_profile(Dims dims, double B_U, double B_V, double B_W, double B_x = 1.0);

/// MGU: β = max_j ‖1−r_j‖∞ + B_{U_h}‖r_j‖∞², θ = β + 2B_{U_r} + B_{U_r}B_{U_h}.
/// LSTM: β = max_j ‖g_j‖∞ + B_{U_c}‖r_j‖∞‖o_j‖∞, θ = β + B_{U_g} + B_{U_r} + B_{U_o}.
/// The max runs over every sequence and step of the dataset.
GateStats gate_stats(const Model& model, const SequenceDataset& data);

/// β restricted to steps 1..upto of one trajectory (running max).
double mgu_beta(const Trajectory& tr, double B_Uh, std::size_t upto);
double lstm_beta(const Trajectory& tr, double B_Uc, std::size_t upto);

/// Declared caps keyed by matrix name.
struct NormCaps {
  std::map<std::string, double, std::less<>> spectral;
  std::map<std::string, double, std::less<>> two_one;
  std::map<std::string, double, std::less<>> frobenius;
};

struct AssumptionCheck {
  std::string id;
  bool passed = false;
  double measured = 0.0;
  double threshold = 0.0;
};

struct AssumptionReport {
  std::vector<AssumptionCheck> checks;
  bool all_passed() const;
  const AssumptionCheck* find(std::string_view id) const;
};

/// Input budget, declared caps, σ(0) = 0 for the state/output activations and,
/// for conv models, filter orthogonality 𝒰ᵀ𝒰 = 𝒰𝒰ᵀ = I/k to 1e−10 entrywise.
/// Failures are report entries, never exceptions.
AssumptionReport check_assumptions(const Model& model, const SequenceDataset& data,
                                   const NormCaps& caps = {});

/// Half-up rounding to `decimals` places, formatted with exactly that many.
std::string format_ratio(double value, int decimals);

}  // namespace rnngen
