// SPDX-License-Identifier: Apache-2.0
#include "rnngen/cells.hpp"

#include <cmath>
#include <string>

#include "rnngen/errors.hpp"

namespace rnngen {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void apply_sigmoid(std::span<double> v) {
  for (double& x : v) x = sigmoid(x);
}

void apply_tanh(std::span<double> v) {
  for (double& x : v) x = std::tanh(x);
}

// W x + U h
Vector affine(const Matrix& W, std::span<const double> x, const Matrix& U,
              std::span<const double> h) {
  Vector a = matvec(W, x);
  const Vector uh = matvec(U, h);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += uh[i];
  return a;
}

void require_shape(const Matrix& m, std::string_view name, std::size_t rows, std::size_t cols) {
  if (m.rows() != rows || m.cols() != cols) {
    throw InvalidInput(std::string(name) + ": expected " + std::to_string(rows) + "x" +
                       std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                       std::to_string(m.cols()));
  }
  if (!m.all_finite()) throw InvalidInput(std::string(name) + ": non-finite entries");
}

void require_inputs(const Sequence& xs, std::size_t d_x) {
  for (std::size_t t = 0; t < xs.size(); ++t) {
    if (xs[t].size() != d_x) {
      throw InvalidInput("input x_" + std::to_string(t + 1) + " has length " +
                         std::to_string(xs[t].size()) + ", expected " + std::to_string(d_x));
    }
  }
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

std::string_view to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::tanh: return "tanh";
    case ActivationKind::sigmoid: return "sigmoid";
    case ActivationKind::relu: return "relu";
    case ActivationKind::identity: return "identity";
  }
  return "unknown";
}

ActivationKind activation_kind_from_string(std::string_view name) {
  if (name == "tanh") return ActivationKind::tanh;
  if (name == "sigmoid") return ActivationKind::sigmoid;
  if (name == "relu") return ActivationKind::relu;
  if (name == "identity") return ActivationKind::identity;
  throw InvalidInput("unknown activation '" + std::string(name) + "'");
}

Activation Activation::of(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::tanh: return tanh();
    case ActivationKind::sigmoid: return sigmoid();
    case ActivationKind::relu: return relu();
    case ActivationKind::identity: return identity();
  }
  return identity();
}

double Activation::operator()(double x) const {
  switch (kind) {
    case ActivationKind::tanh: return std::tanh(x);
    case ActivationKind::sigmoid: return rnngen::sigmoid(x);
    case ActivationKind::relu: return x > 0.0 ? x : 0.0;
    case ActivationKind::identity: return x;
  }
  return x;
}

void Activation::apply(std::span<double> v) const {
  for (double& x : v) x = (*this)(x);
}

std::string_view to_string(CellType cell) {
  switch (cell) {
    case CellType::vanilla: return "vanilla";
    case CellType::mgu: return "mgu";
    case CellType::lstm: return "lstm";
    case CellType::conv: return "conv";
  }
  return "unknown";
}

CellType cell_type_from_string(std::string_view name) {
  if (name == "vanilla") return CellType::vanilla;
  if (name == "mgu") return CellType::mgu;
  if (name == "lstm") return CellType::lstm;
  if (name == "conv") return CellType::conv;
  throw InvalidInput("unsupported cell type '" + std::string(name) + "'");
}

CellType cell_type(const ModelWeights& w) {
  return std::visit(Overloaded{
                        [](const VanillaWeights&) { return CellType::vanilla; },
                        [](const MguWeights&) { return CellType::mgu; },
                        [](const LstmWeights&) { return CellType::lstm; },
                        [](const ConvWeights&) { return CellType::conv; },
                    },
                    w);
}

std::vector<NamedMatrix> named_matrices(const ModelWeights& w) {
  return std::visit(
      Overloaded{
          [](const VanillaWeights& v) -> std::vector<NamedMatrix> {
            return {{"U", &v.U}, {"V", &v.V}, {"W", &v.W}};
          },
          [](const MguWeights& v) -> std::vector<NamedMatrix> {
            return {{"W_r", &v.W_r}, {"W_h", &v.W_h}, {"U_r", &v.U_r}, {"U_h", &v.U_h},
                    {"V", &v.V}};
          },
          [](const LstmWeights& v) -> std::vector<NamedMatrix> {
            return {{"W_g", &v.W_g}, {"W_r", &v.W_r}, {"W_o", &v.W_o},
                    {"W_c", &v.W_c}, {"U_g", &v.U_g}, {"U_r", &v.U_r},
                    {"U_o", &v.U_o}, {"U_c", &v.U_c}, {"V", &v.V}};
          },
          [](const ConvWeights& v) -> std::vector<NamedMatrix> {
            return {{"U_cal", &v.U_cal}, {"V_cal", &v.V_cal}, {"W_cal", &v.W_cal}};
          },
      },
      w);
}

std::vector<Matrix*> mutable_matrices(ModelWeights& w) {
  std::vector<Matrix*> out;
  for (const NamedMatrix& nm : named_matrices(w)) out.push_back(const_cast<Matrix*>(nm.matrix));
  return out;
}

Dims validate(const ModelWeights& w) {
  return std::visit(
      Overloaded{
          [](const VanillaWeights& v) {
            Dims d{v.W.cols(), v.U.rows(), v.V.rows()};
            require_shape(v.U, "U", d.d_h, d.d_h);
            require_shape(v.V, "V", d.d_y, d.d_h);
            require_shape(v.W, "W", d.d_h, d.d_x);
            return d;
          },
          [](const MguWeights& v) {
            Dims d{v.W_h.cols(), v.U_h.rows(), v.V.rows()};
            require_shape(v.W_r, "W_r", d.d_h, d.d_x);
            require_shape(v.W_h, "W_h", d.d_h, d.d_x);
            require_shape(v.U_r, "U_r", d.d_h, d.d_h);
            require_shape(v.U_h, "U_h", d.d_h, d.d_h);
            require_shape(v.V, "V", d.d_y, d.d_h);
            return d;
          },
          [](const LstmWeights& v) {
            Dims d{v.W_c.cols(), v.U_c.rows(), v.V.rows()};
            for (const auto& [name, m] : {std::pair{"W_g", &v.W_g}, {"W_r", &v.W_r},
                                          {"W_o", &v.W_o}, {"W_c", &v.W_c}}) {
              require_shape(*m, name, d.d_h, d.d_x);
            }
            for (const auto& [name, m] : {std::pair{"U_g", &v.U_g}, {"U_r", &v.U_r},
                                          {"U_o", &v.U_o}, {"U_c", &v.U_c}}) {
              require_shape(*m, name, d.d_h, d.d_h);
            }
            require_shape(v.V, "V", d.d_y, d.d_h);
            return d;
          },
          [](const ConvWeights& v) {
            const std::size_t k = v.U_cal.rows();
            if (k == 0) throw InvalidInput("conv: empty filter bank");
            require_shape(v.U_cal, "U_cal", k, k);
            require_shape(v.V_cal, "V_cal", k, k);
            require_shape(v.W_cal, "W_cal", k, k);
            if (k > v.d) throw InvalidInput("conv: filter length k exceeds data dimension d");
            if (v.K < 1 || v.K > v.d) throw InvalidInput("conv: K must lie in [1, d]");
            return Dims{v.d, v.d, v.K};
          },
      },
      w);
}

Trajectory vanilla_forward(const VanillaWeights& w, const Sequence& xs, const Activation& sigma_h,
                           const Activation& sigma_y) {
  const Dims dims = validate(w);
  require_inputs(xs, dims.d_x);
  Trajectory tr;
  tr.h.reserve(xs.size());
  tr.y.reserve(xs.size());
  Vector h(dims.d_h, 0.0);
  for (const Vector& x : xs) {
    h = affine(w.W, x, w.U, h);
    sigma_h.apply(h);
    Vector y = matvec(w.V, h);
    sigma_y.apply(y);
    tr.h.push_back(h);
    tr.y.push_back(std::move(y));
  }
  return tr;
}

Trajectory mgu_forward(const MguWeights& w, const Sequence& xs, const Activation& sigma_y) {
  const Dims dims = validate(w);
  require_inputs(xs, dims.d_x);
  Trajectory tr;
  Vector h(dims.d_h, 0.0);
  for (const Vector& x : xs) {
    Vector r = affine(w.W_r, x, w.U_r, h);
    apply_sigmoid(r);
    Vector cand = affine(w.W_h, x, w.U_h, hadamard(r, h));
    apply_tanh(cand);
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = (1.0 - r[i]) * h[i] + r[i] * cand[i];
    Vector y = matvec(w.V, h);
    sigma_y.apply(y);
    tr.r.push_back(std::move(r));
    tr.h.push_back(h);
    tr.y.push_back(std::move(y));
  }
  return tr;
}

Trajectory lstm_forward(const LstmWeights& w, const Sequence& xs, const Activation& sigma_y) {
  const Dims dims = validate(w);
  require_inputs(xs, dims.d_x);
  Trajectory tr;
  Vector h(dims.d_h, 0.0);
  Vector c(dims.d_h, 0.0);
  for (const Vector& x : xs) {
    Vector g = affine(w.W_g, x, w.U_g, h);
    Vector r = affine(w.W_r, x, w.U_r, h);
    Vector o = affine(w.W_o, x, w.U_o, h);
    Vector cand = affine(w.W_c, x, w.U_c, h);
    apply_sigmoid(g);
    apply_sigmoid(r);
    apply_sigmoid(o);
    apply_tanh(cand);
    for (std::size_t i = 0; i < c.size(); ++i) {
      c[i] = g[i] * c[i] + r[i] * cand[i];
      h[i] = o[i] * std::tanh(c[i]);
    }
    Vector y = matvec(w.V, h);
    sigma_y.apply(y);
    tr.g.push_back(std::move(g));
    tr.r.push_back(std::move(r));
    tr.o.push_back(std::move(o));
    tr.c.push_back(c);
    tr.h.push_back(h);
    tr.y.push_back(std::move(y));
  }
  return tr;
}

Matrix ConvOperator::effective() const { return (pooling * stacked).columns(0, d); }

Vector ConvOperator::apply(std::span<const double> x) const {
  if (x.size() != d) throw InvalidInput("conv operator: input length mismatch");
  Vector padded(d + k - 1, 0.0);
  std::copy(x.begin(), x.end(), padded.begin());
  return matvec(pooling, matvec(stacked, padded));
}

ConvOperator build_conv_operator(const Matrix& filters, std::size_t d) {
  const std::size_t k = filters.rows();
  if (k == 0 || filters.cols() != k) throw InvalidInput("conv filters must be a nonempty k x k bank");
  if (k > d) {
    throw InvalidInput("conv filters: k = " + std::to_string(k) + " exceeds d = " +
                       std::to_string(d));
  }
  if (!filters.all_finite()) throw InvalidInput("conv filters: non-finite entries");

  ConvOperator op;
  op.d = d;
  op.k = k;
  op.stacked = Matrix(k * d, d + k - 1);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t row = 0; row < d; ++row) {
      for (std::size_t tap = 0; tap < k; ++tap) {
        op.stacked(i * d + row, row + tap) = filters(tap, i);
      }
    }
  }
  op.pooling = Matrix(d, k * d);
  const double inv_k = 1.0 / static_cast<double>(k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t row = 0; row < d; ++row) op.pooling(row, i * d + row) = inv_k;
  return op;
}

Matrix block_average_pooling(std::size_t d, std::size_t K) {
  if (K < 1 || K > d) throw InvalidInput("block pooling: K must lie in [1, d]");
  Matrix p(K, d);
  const std::size_t block = d / K;
  for (std::size_t b = 0; b < K; ++b) {
    const std::size_t first = b * block;
    const std::size_t last = (b + 1 == K) ? d : first + block;
    const double w = 1.0 / static_cast<double>(last - first);
    for (std::size_t j = first; j < last; ++j) p(b, j) = w;
  }
  return p;
}

Trajectory conv_forward(const ConvWeights& w, const Sequence& xs, const Activation& sigma_h,
                        const Activation& sigma_y) {
  validate(w);
  require_inputs(xs, w.d);
  const Matrix U = build_conv_operator(w.U_cal, w.d).effective();
  const Matrix W = build_conv_operator(w.W_cal, w.d).effective();
  const Matrix V = block_average_pooling(w.d, w.K) * build_conv_operator(w.V_cal, w.d).effective();
  Trajectory tr;
  Vector h(w.d, 0.0);
  for (const Vector& x : xs) {
    h = affine(W, x, U, h);
    sigma_h.apply(h);
    Vector y = matvec(V, h);
    sigma_y.apply(y);
    tr.h.push_back(h);
    tr.y.push_back(std::move(y));
  }
  return tr;
}

Trajectory forward(const Model& model, const Sequence& xs) {
  return std::visit(Overloaded{
                        [&](const VanillaWeights& w) {
                          return vanilla_forward(w, xs, model.sigma_h, model.sigma_y);
                        },
                        [&](const MguWeights& w) { return mgu_forward(w, xs, model.sigma_y); },
                        [&](const LstmWeights& w) { return lstm_forward(w, xs, model.sigma_y); },
                        [&](const ConvWeights& w) {
                          return conv_forward(w, xs, model.sigma_h, model.sigma_y);
                        },
                    },
                    model.weights);
}

}  // namespace rnngen
