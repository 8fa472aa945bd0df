// SPDX-License-Identifier: Apache-2.0
//
// Forward passes for vanilla, MGU, LSTM and convolutional recurrent cells.
// All recurrences start from h_0 = 0 (and c_0 = 0 for the LSTM).
#pragma once

#include <cstddef>
#include <limits>
#include <string_view>
#include <variant>
#include <vector>

#include "rnngen/linalg.hpp"

namespace rnngen {

enum class ActivationKind { tanh, sigmoid, relu, identity };

std::string_view to_string(ActivationKind kind);
ActivationKind activation_kind_from_string(std::string_view name);

/// Entrywise activation with Lipschitz constant `rho` and output bound `b`.
struct Activation {
  ActivationKind kind = ActivationKind::tanh;
  double rho = 1.0;
  double b = 1.0;

  static Activation tanh() { return {ActivationKind::tanh, 1.0, 1.0}; }
  static Activation sigmoid() { return {ActivationKind::sigmoid, 0.25, 1.0}; }
  static Activation relu() {
    return {ActivationKind::relu, 1.0, std::numeric_limits<double>::infinity()};
  }
  static Activation identity() {
    return {ActivationKind::identity, 1.0, std::numeric_limits<double>::infinity()};
  }
  static Activation of(ActivationKind kind);

  double operator()(double x) const;
  void apply(std::span<double> v) const;
  bool maps_zero_to_zero() const noexcept { return kind != ActivationKind::sigmoid; }

  friend bool operator==(const Activation&, const Activation&) = default;
};

enum class CellType { vanilla, mgu, lstm, conv };

std::string_view to_string(CellType cell);
/// Throws InvalidInput for anything other than the four supported cells.
CellType cell_type_from_string(std::string_view name);

struct VanillaWeights {
  Matrix U;  // d_h × d_h
  Matrix V;  // d_y × d_h
  Matrix W;  // d_h × d_x
  friend bool operator==(const VanillaWeights&, const VanillaWeights&) = default;
};

struct MguWeights {
  Matrix W_r, W_h;  // d_h × d_x
  Matrix U_r, U_h;  // d_h × d_h
  Matrix V;         // d_y × d_h
  friend bool operator==(const MguWeights&, const MguWeights&) = default;
};

struct LstmWeights {
  Matrix W_g, W_r, W_o, W_c;  // d_h × d_x
  Matrix U_g, U_r, U_o, U_c;  // d_h × d_h
  Matrix V;                   // d_y × d_h
  friend bool operator==(const LstmWeights&, const LstmWeights&) = default;
};

/// Filter banks are k × k with one k-tap filter per column.
struct ConvWeights {
  Matrix U_cal, V_cal, W_cal;
  std::size_t d = 0;  // data (and hidden) dimension
  std::size_t K = 0;  // number of classes after output pooling
  std::size_t k() const noexcept { return U_cal.rows(); }
  friend bool operator==(const ConvWeights&, const ConvWeights&) = default;
};

using ModelWeights = std::variant<VanillaWeights, MguWeights, LstmWeights, ConvWeights>;

struct NamedMatrix {
  std::string_view name;
  const Matrix* matrix;
};

/// Matrices in canonical order, keyed by their conventional symbol
/// ("U", "V", "W", "W_r", ..., "U_cal").
std::vector<NamedMatrix> named_matrices(const ModelWeights& w);
std::vector<Matrix*> mutable_matrices(ModelWeights& w);

struct Dims {
  std::size_t d_x = 0, d_h = 0, d_y = 0;
};

CellType cell_type(const ModelWeights& w);
/// Validates shapes and finiteness; throws InvalidInput naming the matrix.
Dims validate(const ModelWeights& w);

/// A model is a weight set plus its hidden/output activations. Gated cells
/// always use sigmoid gates and tanh candidates; sigma_h is ignored for them.
struct Model {
  ModelWeights weights;
  Activation sigma_h = Activation::tanh();
  Activation sigma_y = Activation::identity();

  CellType cell() const { return cell_type(weights); }
  friend bool operator==(const Model&, const Model&) = default;
};

using Sequence = std::vector<Vector>;

struct Trajectory {
  std::vector<Vector> h;
  std::vector<Vector> y;
  std::vector<Vector> c;  // LSTM memory
  std::vector<Vector> g;  // LSTM forget gate
  std::vector<Vector> r;  // MGU forget gate / LSTM input gate
  std::vector<Vector> o;  // LSTM output gate
  std::size_t steps() const noexcept { return h.size(); }
};

Trajectory vanilla_forward(const VanillaWeights& w, const Sequence& xs,
                           const Activation& sigma_h, const Activation& sigma_y);
Trajectory mgu_forward(const MguWeights& w, const Sequence& xs, const Activation& sigma_y);
Trajectory lstm_forward(const LstmWeights& w, const Sequence& xs, const Activation& sigma_y);
Trajectory conv_forward(const ConvWeights& w, const Sequence& xs, const Activation& sigma_h,
                        const Activation& sigma_y);
Trajectory forward(const Model& model, const Sequence& xs);

/// Stacked circulant-like operator for a k-filter bank acting on R^d.
///
/// Each input is padded with k-1 trailing zeros. `stacked` is the
/// (k·d) × (d+k-1) matrix [C_1; ...; C_k] where row j of C_i holds filter i
/// at columns j..j+k-1, and `pooling` is (1/k)[I_d ... I_d], so that
/// filters ∗ x = pooling · stacked · pad(x) has dimension d.
struct ConvOperator {
  Matrix stacked;
  Matrix pooling;
  std::size_t d = 0;
  std::size_t k = 0;

  /// The d × d map x ↦ pooling · stacked · pad(x).
  Matrix effective() const;
  Vector apply(std::span<const double> x) const;
};

ConvOperator build_conv_operator(const Matrix& filters, std::size_t d);

/// K × d blockwise averaging into contiguous blocks of size floor(d/K); the
/// last block absorbs the remainder.
Matrix block_average_pooling(std::size_t d, std::size_t K);

}  // namespace rnngen
