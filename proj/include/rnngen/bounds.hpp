// SPDX-License-Identifier: Apache-2.0
//
// Complexity and generalization bounds for vanilla, MGU, LSTM and conv RNNs.
//
// Logarithms are natural. Every log factor is evaluated as log(max(arg, e)),
// so √log terms are at least 1. Products that may overflow (the geometric
// ratio raised through t steps) are accumulated in log space; a report whose
// value does not fit in a double carries value = +inf, overflow = true and a
// finite log_value.
//
// Only the vanilla ERC bound and the (2,1)-norm refinement have explicit
// constants. The PAC-Bayes, MGU, LSTM, conv and comparison expressions are
// order-only (leading constant 1) and are flagged as such.
#pragma once

#include <array>
#include <functional>
#include <string>
#include <string_view>

#include "rnngen/norm_audit.hpp"

namespace rnngen {

enum class Regime { I, II, III };

std::string_view to_string(Regime r);
/// I: β < 1 − 1e−12, II: |β − 1| ≤ 1e−12, III: β > 1 + 1e−12.
Regime regime_classify(double beta);
/// Asymptotic order of the vanilla gap in each regime.
std::string_view regime_order(Regime r);

struct BoundQuery {
  NormProfile profile;
  double rho_h = 1.0;
  double rho_y = 1.0;
  /// Entrywise bound of σ_h (may be +inf).
  double b = 1.0;
  int t = 1;
  std::size_t m = 1;
  double gamma = 1.0;
  double delta = 0.05;
  /// Echoed in reports only.
  int K = 2;

  void validate() const;
};

/// Activation constants from the model, everything else from the arguments.
BoundQuery make_query(const Model& model, NormProfile profile, int t, std::size_t m,
                      double gamma, double delta = 0.05);

struct BoundReport {
  std::string id;
  double value = 0.0;
  double log_value = 0.0;
  bool overflow = false;
  bool order_only = false;
  Regime regime = Regime::I;
  double width = 0.0;   // d
  double beta = 0.0;    // ρ_h·B_U (gate β for MGU/LSTM)
  double lambda_t = 0.0;
  GeomRatio ratio;
  double range_r = 0.0;  // r, range of the margin class
  double c = 0.0;
  int t = 1;
  std::size_t m = 1;
  double gamma = 1.0;
  int K = 2;
};

/// 4/(mγ) + 24/(√m γ)·√(3 d² r² log(24 c √(dm) t·ratio)) with
/// r = ρ_y B_V min{b√d, ρ_h B_W B_x·ratio}, c = ρ_y ρ_h B_V B_W B_x max{1, ρ_h B_U},
/// ratio = (β^t − 1)/(β − 1) at β = ρ_h B_U, d = √(d_x d_h + d_h² + d_h d_y).
BoundReport vanilla_erc_bound(const BoundQuery& q);

/// risk + 2·ERC + 3√(log(2/δ)/(2m)).
double vanilla_generalization_bound(const BoundQuery& q, double empirical_ramp_risk);

/// 4/(mγ) + 432/(γ√m)·√(M_U L_U² + M_V L_V² + M_W L_W²)·√log(2d²)·log(2m√d) with
/// the output Lipschitz constants L_U = ρ_h B_V B_W t a_t, L_V = B_W a_t,
/// L_W = B_V a_t, a_t = ρ_y ρ_h B_x·ratio and d = max{d_x, d_y, d_h}.
/// `squared_21` replaces each M_• by M_•².
BoundReport refined_21_bound(const BoundQuery& q, bool squared_21 = false);

/// α′·B_U·min{b√d, ρ_h B_x B_W·ratio}·S_F·ratio·√(d ln d)/(√m γ) with
/// α′ = ρ_h ρ_y B_W B_x, S_F = B_{U,F} + B_{V,F} + B_{W,F}. Requires m ≥ 2.
BoundReport pacbayes_bound(const BoundQuery& q);

/// Final PAC-Bayes wrapper 4√((KL + log(6m/δ))/(m − 1)).
double pacbayes_gap(double kl, std::size_t m, double delta);

/// Ours, Bound 1, Bound 2, Bound 3 (in that order), each divided by γ.
std::array<BoundReport, 4> comparison_bounds(const BoundQuery& q);

/// log(a.value / b.value), finite even when the values overflow.
double log_ratio(const BoundReport& a, const BoundReport& b);

/// d ρ_y B_V min{√d, B_W B_x·ratio(β,t)}·√log(ratio(θ,t)·d√m)/(√m γ) with
/// W = W_h (MGU) or W_c (LSTM) and β, θ taken from profile.gates.
BoundReport mgu_bound(const BoundQuery& q);
BoundReport lstm_bound(const BoundQuery& q);

/// B_x·k·t·√log(d t √m)/(√m γ).
BoundReport conv_bound(const BoundQuery& q);

/// log N(F_t, ε) ≤ 3d²·log(1 + 6c√d·t·ratio/ε). With `small_eps`, the
/// simplified 3d²·log(12c√d·t·ratio/ε), floored at 0.
double covering_log(const BoundQuery& q, double eps, bool small_eps = false);

/// d₁d₂·log(1 + 2 min{√d₁, √d₂}·λ/ε) for {A : ‖A‖₂ ≤ λ} under ‖·‖_F.
double matrix_covering_log(std::size_t d1, std::size_t d2, double lambda, double eps);

struct DudleyResult {
  double value = 0.0;
  double best_alpha = 0.0;
};

/// inf over α of 4α/√m + (12/m)∫_α^{2r√m} √(log N(ε)) dε. The α grid is
/// logarithmic over [1e−6/√m, max(2r√m, 1/√m)] and always contains 1/√m;
/// each integral uses a composite midpoint rule in log ε with
/// `quadrature_points` nodes.
DudleyResult dudley_erc(const std::function<double(double)>& covering_log_fn, double r,
                        std::size_t m, std::size_t grid_points = 96,
                        std::size_t quadrature_points = 1024);

/// Dudley infimum for F_{γ,t}: covering of the margin class at ε/2, scaled by 1/γ.
DudleyResult vanilla_dudley_erc(const BoundQuery& q, std::size_t grid_points = 96,
                                std::size_t quadrature_points = 1024);

}  // namespace rnngen
