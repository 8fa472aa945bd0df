// SPDX-License-Identifier: Apache-2.0
//
// Randomised checks of the inequalities behind the bounds, and a Monte Carlo
// lower estimate of the empirical Rademacher complexity.
//
// A trial compares LHS against RHS at every step t ≤ T and keeps its worst
// ratio LHS/RHS; it is a violation when that ratio exceeds 1 + 1e−9. Trials
// draw from independent streams seeded by (seed, trial index), so a report
// depends only on its parameters.
#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rnngen/cells.hpp"
#include "rnngen/data.hpp"

namespace rnngen {

inline constexpr double kViolationSlack = 1e-9;

struct TrialReport {
  std::string kind;
  std::size_t trials = 0;
  std::size_t violations = 0;
  double worst_ratio = 0.0;
  std::uint64_t seed = 0;

  /// Records one trial from its worst LHS/RHS ratio.
  void add(double ratio);
  void merge(const TrialReport& other);
  bool clean() const noexcept { return violations == 0; }
};

/// LHS/RHS with 0/0 = 0 and x/0 = DBL_MAX, so the ratio stays finite.
double check_ratio(double lhs, double rhs);

std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t index);

Matrix random_uniform(std::size_t rows, std::size_t cols, double s, std::mt19937_64& rng);
/// Haar-ish orthogonal k × k matrix (Gram–Schmidt on Gaussian columns).
Matrix random_orthogonal(std::size_t k, std::mt19937_64& rng);

/// Random weights for each cell family. Dimensions are drawn uniformly in
/// 1..max_*, entries uniform in [−entry_scale, entry_scale]; recurrent
/// matrices are optionally rescaled to a fixed spectral norm.
struct WeightSampler {
  std::size_t max_d_x = 4, max_d_h = 8, max_d_y = 4;
  double entry_scale = 1.0;
  std::optional<double> recurrent_spectral;
  Activation sigma_h = Activation::tanh();
  Activation sigma_y = Activation::identity();
  std::size_t conv_d = 6, conv_k = 2, conv_K = 2;
  /// Conv banks are orthogonal scaled by 1/√k when true, unscaled otherwise.
  bool conv_scaled = true;

  Model sample(CellType cell, std::mt19937_64& rng) const;
};

struct DataSampler {
  std::size_t T = 30;
  double B_x = 1.0;
  Sequence sample(std::size_t d_x, std::mt19937_64& rng) const;
};

std::size_t input_dim(const Model& model);

/// Right-hand side of the hidden-state norm bound at step t (1-based):
/// vanilla min{b√d_h, ρ_h B_W B_x·ratio(ρ_h B_U, t)}; MGU min{√d_h, B_{W_h} B_x·ratio(β_t, t)};
/// LSTM B_{W_c} B_x·ratio(β_t, t) (bounding ‖c_t‖ ≥ ‖h_t‖); conv min{√d, B_x t}.
/// β_t is the running gate statistic over steps ≤ t of `tr`.
double hidden_norm_bound(const Model& model, const Trajectory& tr, std::size_t t, double B_x);

TrialReport verify_hidden_norm(CellType cell, const WeightSampler& weights,
                               const DataSampler& data, std::size_t trials, std::uint64_t seed);

/// Right-hand side of the output Lipschitz inequality at step t between two
/// weight sets a and b (trajectories on the same inputs). Norm bounds B_• are
/// the max over the pair.
///   vanilla: L_U‖ΔU‖_F + L_V‖ΔV‖_F + L_W‖ΔW‖_F, L_U = ρ_h B_V B_W t a_t,
///            L_V = B_W a_t, L_W = B_V a_t, a_t = ρ_y ρ_h B_x·ratio(ρ_h B_U, t)
///   mgu:     the same chain with ratio(θ, t) and spectral deltas
///   lstm:    the corrected recursion (see lstm_lipschitz_rhs)
///   conv:    d‖Δ𝒱‖_F + B_x√d·t‖Δ𝒲‖_F + d·t‖Δ𝒰‖_F
double output_lipschitz_rhs(const Model& a, const Model& b, const Trajectory& ta,
                            const Trajectory& tb, std::size_t t, double B_x);

/// LSTM: with u_t = max{‖Δc_t‖, ‖Δh_t‖},
///   u_t ≤ θ_L u_{t−1} + A,  θ_L = G + κB_{U_g} + B_{U_r} + R·B_{U_c} + B_{U_o},
///   A = κa_g + a_r + R·a_c + a_o,  a_X = B_x‖ΔW_X‖₂ + √d_h‖ΔU_X‖₂,
/// where G, R are the largest ‖g_j‖∞, ‖r_j‖∞ (j ≤ t, both trajectories) and
/// κ = max{1, ‖c_j‖∞ : j < t}. Then ‖Δy_t‖ ≤ ρ_y B_V A·ratio(θ_L, t) + ρ_y√d_h‖ΔV‖₂.
double lstm_lipschitz_rhs(const Model& a, const Model& b, const Trajectory& ta,
                          const Trajectory& tb, std::size_t t, double B_x);

/// A shorter LSTM form that drops the U-coupling, kept only to document that
/// it can fail: it gives ‖ΔW_o‖ and ‖ΔU_o‖ a coefficient that vanishes when the U's do.
double lstm_lipschitz_rhs_uncorrected(const Model& a, const Model& b, const Trajectory& ta,
                                    std::size_t t, double B_x);

/// Perturbs a model by `scale`. Vanilla/MGU/LSTM matrices each receive, with
/// probability 2/3, an additive uniform perturbation of magnitude scale·u
/// (u log-uniform in [1e−3, 1]). Conv banks are rotated by a small orthogonal
/// matrix so they stay orthogonal.
Model perturb(const Model& base, double scale, std::mt19937_64& rng);

TrialReport verify_output_lipschitz(CellType cell, const WeightSampler& weights,
                                    const DataSampler& data, double scale, std::size_t trials,
                                    std::uint64_t seed);

/// Fixed base model, sequences taken round-robin from `data`.
TrialReport verify_output_lipschitz(const Model& base, const SequenceDataset& data, double scale,
                                    std::size_t trials, std::uint64_t seed);

struct MarginLipschitzReport {
  TrialReport factor_two;  // |ΔM| ≤ 2‖Δy‖₂
  TrialReport unit_constant;  // |ΔM| ≤ ‖Δy‖₂
};

/// Trial 0 is always the pair y = (1, −1, −1...), y′ = (−1, 1, −1...), z = 1,
/// where |ΔM| = √2‖Δy‖₂.
MarginLipschitzReport verify_margin_lipschitz(std::size_t trials, std::size_t dim,
                                              std::uint64_t seed);

/// Per bank: off-diagonals of W_𝒰ᵀW_𝒰 ≤ 1e−10, ‖W_𝒰‖₂ ≤ 1 + 1e−8 and
/// ‖P‖₂ ≤ 1 (the pooling norm is 1/√k, see README).
TrialReport verify_conv_orthogonality(std::size_t k, std::size_t d, std::size_t trials,
                                      std::uint64_t seed, bool scaled = true);

struct ErcEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t rademacher_draws = 0;
  std::size_t candidates_per_draw = 0;
  std::uint64_t seed = 0;
};

/// Mean over sign vectors ε of max_c (1/m)Σ_i ε_i·responses[c][i]. With
/// `enumerate`, every one of the 2^m sign patterns is used once (m ≤ 24);
/// otherwise `draws` patterns are sampled from `seed`.
ErcEstimate erc_from_responses(const std::vector<Vector>& responses, std::size_t draws,
                               bool enumerate, std::uint64_t seed);

/// Vanilla weights with ‖U‖₂ ≤ cap_U, ‖V‖₂ ≤ cap_V, ‖W‖₂ ≤ cap_W. Half of the
/// samples sit on the cap, the rest at a uniform fraction of it.
struct VanillaClassSampler {
  Dims dims{2, 2, 2};
  double cap_U = 1.0, cap_V = 1.0, cap_W = 1.0;
  Activation sigma_h = Activation::tanh();
  Activation sigma_y = Activation::identity();

  Model sample(std::mt19937_64& rng) const;
  /// Rescales any matrix above its cap back onto it.
  void project(VanillaWeights& w) const;
};

struct ErcConfig {
  std::size_t draws = 200;
  std::size_t candidates = 500;
  std::uint64_t seed = 0;
  /// Hill-climb the best `refine_top` candidates of each draw.
  bool refine = false;
  std::size_t refine_top = 1;
  bool enumerate_signs = false;
};

/// Candidate pool shared by all draws: candidate c comes from stream (seed, c)
/// so enlarging the pool never loses a candidate. Responses are
/// ℒ_γ(−𝓜(y_{i,t}, z_{i,t})). Refinement probes every weight coordinate with
/// steps ±{0.1, 0.03, 0.01}, keeps improvements and projects onto the caps.
ErcEstimate estimate_erc_mc(const VanillaClassSampler& cls, const SequenceDataset& data,
                            std::size_t t, double gamma, const ErcConfig& cfg);

}  // namespace rnngen
