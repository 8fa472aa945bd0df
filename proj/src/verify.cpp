// SPDX-License-Identifier: Apache-2.0
#include "rnngen/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rnngen/errors.hpp"
#include "rnngen/margin.hpp"
#include "rnngen/norm_audit.hpp"
#include "rnngen/train.hpp"

namespace rnngen {

namespace {

constexpr double kOffDiagTolerance = 1e-10;
constexpr double kSpectralSlack = 1e-8;

double spec(const Matrix& m) { return spectral_norm(m); }
double frob(const Matrix& m) { return frobenius_norm(m); }

// L·Δ with 0·∞ = 0 (a zero perturbation contributes nothing).
double term(double L, double delta) { return delta == 0.0 ? 0.0 : L * delta; }

double ratio_value(double base, std::size_t t) {
  return geometric_ratio(base, static_cast<int>(t)).value;
}

double max_inf(const std::vector<Vector>& vs, std::size_t upto) {
  double m = 0.0;
  for (std::size_t j = 0; j < std::min(upto, vs.size()); ++j) m = std::max(m, norm_inf(vs[j]));
  return m;
}

// Modified Gram–Schmidt on the columns, in place.
Matrix orthonormalize_columns(Matrix a) {
  const std::size_t n = a.cols();
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t p = 0; p < j; ++p) {
      double proj = 0.0;
      for (std::size_t i = 0; i < a.rows(); ++i) proj += a(i, p) * a(i, j);
      for (std::size_t i = 0; i < a.rows(); ++i) a(i, j) -= proj * a(i, p);
    }
    double nrm = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) nrm += a(i, j) * a(i, j);
    nrm = std::sqrt(nrm);
    if (nrm == 0.0) throw InvalidInput("orthonormalize: rank-deficient matrix");
    for (std::size_t i = 0; i < a.rows(); ++i) a(i, j) /= nrm;
  }
  return a;
}

std::size_t pick(std::size_t hi, std::mt19937_64& rng) {
  return std::uniform_int_distribution<std::size_t>(1, std::max<std::size_t>(1, hi))(rng);
}

// Left side of the hidden-norm check: ‖c_t‖ for the LSTM (which dominates
// ‖h_t‖), ‖h_t‖ otherwise.
double hidden_lhs(const Model& model, const Trajectory& tr, std::size_t t) {
  if (model.cell() == CellType::lstm) {
    return std::max(norm2(tr.c[t - 1]), norm2(tr.h[t - 1]));
  }
  return norm2(tr.h[t - 1]);
}

template <typename W>
const W& as(const Model& m) {
  return std::get<W>(m.weights);
}

double vanilla_rhs(const Model& a, const Model& b, std::size_t t, double B_x) {
  const auto& wa = as<VanillaWeights>(a);
  const auto& wb = as<VanillaWeights>(b);
  const double B_U = std::max(spec(wa.U), spec(wb.U));
  const double B_V = std::max(spec(wa.V), spec(wb.V));
  const double B_W = std::max(spec(wa.W), spec(wb.W));
  const double rho_h = a.sigma_h.rho, rho_y = a.sigma_y.rho;
  const double a_t = rho_y * rho_h * B_x * ratio_value(rho_h * B_U, t);
  const double L_U = rho_h * B_V * B_W * static_cast<double>(t) * a_t;
  const double L_V = B_W * a_t;
  const double L_W = B_V * a_t;
  return term(L_U, frob(wa.U - wb.U)) + term(L_V, frob(wa.V - wb.V)) +
         term(L_W, frob(wa.W - wb.W));
}

double mgu_rhs(const Model& a, const Model& b, const Trajectory& ta, std::size_t t, double B_x) {
  const auto& wa = as<MguWeights>(a);
  const auto& wb = as<MguWeights>(b);
  const double B_Uh = std::max(spec(wa.U_h), spec(wb.U_h));
  const double B_Ur = std::max(spec(wa.U_r), spec(wb.U_r));
  const double B_V = std::max(spec(wa.V), spec(wb.V));
  const double beta = mgu_beta(ta, B_Uh, t);
  const double theta = beta + 2.0 * B_Ur + B_Ur * B_Uh;
  const double sd = std::sqrt(static_cast<double>(wa.U_h.rows()));
  const double inner = sd * spec(wa.U_h - wb.U_h) + B_x * spec(wa.W_h - wb.W_h) +
                       (2.0 + B_Uh) * (sd * spec(wa.U_r - wb.U_r) + B_x * spec(wa.W_r - wb.W_r));
  const double rho_y = a.sigma_y.rho;
  return term(rho_y * B_V * ratio_value(theta, t), inner) + rho_y * sd * spec(wa.V - wb.V);
}

double conv_rhs(const Model& a, const Model& b, std::size_t t, double B_x) {
  const auto& wa = as<ConvWeights>(a);
  const auto& wb = as<ConvWeights>(b);
  const double d = static_cast<double>(wa.d);
  const double td = static_cast<double>(t);
  return d * frob(wa.V_cal - wb.V_cal) + B_x * std::sqrt(d) * td * frob(wa.W_cal - wb.W_cal) +
         d * td * frob(wa.U_cal - wb.U_cal);
}

Model sample_vanilla_class(const VanillaClassSampler& cls, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&](std::size_t rows, std::size_t cols, double cap) {
    Matrix m = random_uniform(rows, cols, 1.0, rng);
    const double frac = unit(rng) < 0.5 ? 1.0 : unit(rng);
    return scale_spectral(m, cap * frac);
  };
  const auto [dx, dh, dy] = cls.dims;
  VanillaWeights w;
  w.U = draw(dh, dh, cls.cap_U);
  w.V = draw(dy, dh, cls.cap_V);
  w.W = draw(dh, dx, cls.cap_W);
  return Model{std::move(w), cls.sigma_h, cls.sigma_y};
}

Matrix& select(VanillaWeights& w, int which) {
  return which == 0 ? w.U : (which == 1 ? w.V : w.W);
}

Vector responses_of(const Model& model, const SequenceDataset& data, std::size_t t, double gamma) {
  Vector out;
  out.reserve(data.m());
  for (const LabeledOutput& o : outputs_at(model, data, t)) {
    out.push_back(ramp_loss(-margin(o.y, o.z), gamma));
  }
  return out;
}

}  // namespace

void TrialReport::add(double ratio) {
  ++trials;
  worst_ratio = std::max(worst_ratio, ratio);
  if (ratio > 1.0 + kViolationSlack) ++violations;
}

void TrialReport::merge(const TrialReport& other) {
  trials += other.trials;
  violations += other.violations;
  worst_ratio = std::max(worst_ratio, other.worst_ratio);
}

double check_ratio(double lhs, double rhs) {
  if (rhs > 0.0) return std::min(lhs / rhs, std::numeric_limits<double>::max());
  return lhs > 0.0 ? std::numeric_limits<double>::max() : 0.0;
}

std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

Matrix random_uniform(std::size_t rows, std::size_t cols, double s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-s, s);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = u(rng);
  return m;
}

Matrix random_orthogonal(std::size_t k, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(k, k);
  for (double& v : g.data()) v = normal(rng);
  return orthonormalize_columns(std::move(g));
}

Model WeightSampler::sample(CellType cell, std::mt19937_64& rng) const {
  const double s = entry_scale;
  auto recurrent = [&](std::size_t n) {
    Matrix U = random_uniform(n, n, s, rng);
    return recurrent_spectral ? scale_spectral(U, *recurrent_spectral) : U;
  };
  switch (cell) {
    case CellType::vanilla: {
      const std::size_t dx = pick(max_d_x, rng), dh = pick(max_d_h, rng), dy = pick(max_d_y, rng);
      VanillaWeights w;
      w.U = recurrent(dh);
      w.V = random_uniform(dy, dh, s, rng);
      w.W = random_uniform(dh, dx, s, rng);
      return Model{std::move(w), sigma_h, sigma_y};
    }
    case CellType::mgu: {
      const std::size_t dx = pick(max_d_x, rng), dh = pick(max_d_h, rng), dy = pick(max_d_y, rng);
      MguWeights w;
      w.W_r = random_uniform(dh, dx, s, rng);
      w.W_h = random_uniform(dh, dx, s, rng);
      w.U_r = recurrent(dh);
      w.U_h = recurrent(dh);
      w.V = random_uniform(dy, dh, s, rng);
      return Model{std::move(w), Activation::tanh(), sigma_y};
    }
    case CellType::lstm: {
      const std::size_t dx = pick(max_d_x, rng), dh = pick(max_d_h, rng), dy = pick(max_d_y, rng);
      LstmWeights w;
      w.W_g = random_uniform(dh, dx, s, rng);
      w.W_r = random_uniform(dh, dx, s, rng);
      w.W_o = random_uniform(dh, dx, s, rng);
      w.W_c = random_uniform(dh, dx, s, rng);
      w.U_g = recurrent(dh);
      w.U_r = recurrent(dh);
      w.U_o = recurrent(dh);
      w.U_c = recurrent(dh);
      w.V = random_uniform(dy, dh, s, rng);
      return Model{std::move(w), Activation::tanh(), sigma_y};
    }
    case CellType::conv: {
      const double f = conv_scaled ? 1.0 / std::sqrt(static_cast<double>(conv_k)) : 1.0;
      ConvWeights w;
      w.U_cal = random_orthogonal(conv_k, rng) * f;
      w.V_cal = random_orthogonal(conv_k, rng) * f;
      w.W_cal = random_orthogonal(conv_k, rng) * f;
      w.d = conv_d;
      w.K = conv_K;
      return Model{std::move(w), sigma_h, sigma_y};
    }
  }
  throw InvalidInput("WeightSampler: unknown cell type");
}

Sequence DataSampler::sample(std::size_t d_x, std::mt19937_64& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Sequence xs(T, Vector(d_x));
  for (Vector& x : xs) {
    double n = 0.0;
    while (n == 0.0) {
      for (double& v : x) v = normal(rng);
      n = norm2(x);
    }
    // A quarter of the inputs sit on the sphere, where the bounds are tightest.
    const double radius = unit(rng) < 0.25 ? B_x : B_x * std::sqrt(unit(rng));
    for (double& v : x) v *= radius / n;
    const double after = norm2(x);
    if (after > B_x) for (double& v : x) v *= B_x / after;
  }
  return xs;
}

std::size_t input_dim(const Model& model) {
  return std::visit(
      [](const auto& w) -> std::size_t {
        using T = std::decay_t<decltype(w)>;
        if constexpr (std::is_same_v<T, VanillaWeights>) return w.W.cols();
        else if constexpr (std::is_same_v<T, MguWeights>) return w.W_r.cols();
        else if constexpr (std::is_same_v<T, LstmWeights>) return w.W_g.cols();
        else return w.d;
      },
      model.weights);
}

double hidden_norm_bound(const Model& model, const Trajectory& tr, std::size_t t, double B_x) {
  if (t < 1 || t > tr.steps()) throw InvalidInput("hidden_norm_bound: t out of range");
  switch (model.cell()) {
    case CellType::vanilla: {
      const auto& w = as<VanillaWeights>(model);
      const double rho = model.sigma_h.rho;
      const double cap = model.sigma_h.b * std::sqrt(static_cast<double>(w.U.rows()));
      return std::min(cap, rho * spec(w.W) * B_x * ratio_value(rho * spec(w.U), t));
    }
    case CellType::mgu: {
      const auto& w = as<MguWeights>(model);
      const double beta = mgu_beta(tr, spec(w.U_h), t);
      return std::min(std::sqrt(static_cast<double>(w.U_h.rows())),
                      term(spec(w.W_h) * B_x, ratio_value(beta, t)));
    }
    case CellType::lstm: {
      const auto& w = as<LstmWeights>(model);
      const double beta = lstm_beta(tr, spec(w.U_c), t);
      return term(spec(w.W_c) * B_x, ratio_value(beta, t));
    }
    case CellType::conv: {
      const auto& w = as<ConvWeights>(model);
      return std::min(std::sqrt(static_cast<double>(w.d)), B_x * static_cast<double>(t));
    }
  }
  return 0.0;
}

TrialReport verify_hidden_norm(CellType cell, const WeightSampler& weights,
                               const DataSampler& data, std::size_t trials, std::uint64_t seed) {
  TrialReport rep{"hidden_norm." + std::string(to_string(cell)), 0, 0, 0.0, seed};
  for (std::size_t i = 0; i < trials; ++i) {
    auto rng = trial_rng(seed, i);
    const Model model = weights.sample(cell, rng);
    const Sequence xs = data.sample(input_dim(model), rng);
    const Trajectory tr = forward(model, xs);
    double worst = 0.0;
    for (std::size_t t = 1; t <= tr.steps(); ++t) {
      worst = std::max(worst, check_ratio(hidden_lhs(model, tr, t),
                                          hidden_norm_bound(model, tr, t, data.B_x)));
    }
    rep.add(worst);
  }
  return rep;
}

double lstm_lipschitz_rhs(const Model& a, const Model& b, const Trajectory& ta,
                          const Trajectory& tb, std::size_t t, double B_x) {
  const auto& wa = as<LstmWeights>(a);
  const auto& wb = as<LstmWeights>(b);
  const double sd = std::sqrt(static_cast<double>(wa.U_c.rows()));
  auto B = [](const Matrix& x, const Matrix& y) { return std::max(spec(x), spec(y)); };
  auto delta = [&](const Matrix& W, const Matrix& W2, const Matrix& U, const Matrix& U2) {
    return B_x * spec(W - W2) + sd * spec(U - U2);
  };
  const double G = std::max(max_inf(ta.g, t), max_inf(tb.g, t));
  const double R = std::max(max_inf(ta.r, t), max_inf(tb.r, t));
  const double kappa = std::max({1.0, max_inf(ta.c, t - 1), max_inf(tb.c, t - 1)});
  const double theta = G + kappa * B(wa.U_g, wb.U_g) + B(wa.U_r, wb.U_r) +
                       R * B(wa.U_c, wb.U_c) + B(wa.U_o, wb.U_o);
  const double A = kappa * delta(wa.W_g, wb.W_g, wa.U_g, wb.U_g) +
                   delta(wa.W_r, wb.W_r, wa.U_r, wb.U_r) +
                   R * delta(wa.W_c, wb.W_c, wa.U_c, wb.U_c) +
                   delta(wa.W_o, wb.W_o, wa.U_o, wb.U_o);
  const double rho_y = a.sigma_y.rho;
  return term(rho_y * B(wa.V, wb.V) * ratio_value(theta, t), A) + rho_y * sd * spec(wa.V - wb.V);
}

double lstm_lipschitz_rhs_uncorrected(const Model& a, const Model& b, const Trajectory& ta,
                                    std::size_t t, double B_x) {
  const auto& wa = as<LstmWeights>(a);
  const auto& wb = as<LstmWeights>(b);
  const double sd = std::sqrt(static_cast<double>(wa.U_c.rows()));
  const double B_Ug = spec(wa.U_g), B_Ur = spec(wa.U_r), B_Uo = spec(wa.U_o), B_Uc = spec(wa.U_c);
  const double beta = lstm_beta(ta, B_Uc, t);
  const double theta = beta + B_Ug + B_Ur + B_Uo;
  const double mix = B_Uc + B_Ug + B_Ur;
  const double w_part = spec(wa.W_c - wb.W_c) + spec(wa.W_g - wb.W_g) +
                        spec(wa.W_r - wb.W_r) + mix * spec(wa.W_o - wb.W_o);
  const double u_part = spec(wa.U_c - wb.U_c) + spec(wa.U_g - wb.U_g) +
                        spec(wa.U_r - wb.U_r) + mix * spec(wa.U_o - wb.U_o);
  const double rho_y = a.sigma_y.rho;
  return term(rho_y * spec(wa.V) * ratio_value(theta, t), B_x * w_part + sd * u_part) +
         rho_y * sd * spec(wa.V - wb.V);
}

double output_lipschitz_rhs(const Model& a, const Model& b, const Trajectory& ta,
                            const Trajectory& tb, std::size_t t, double B_x) {
  if (a.cell() != b.cell()) throw InvalidInput("output_lipschitz_rhs: cell types differ");
  switch (a.cell()) {
    case CellType::vanilla: return vanilla_rhs(a, b, t, B_x);
    case CellType::mgu: return mgu_rhs(a, b, ta, t, B_x);
    case CellType::lstm: return lstm_lipschitz_rhs(a, b, ta, tb, t, B_x);
    case CellType::conv: return conv_rhs(a, b, t, B_x);
  }
  return 0.0;
}

Model perturb(const Model& base, double scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Model out = base;
  if (auto* conv = std::get_if<ConvWeights>(&out.weights)) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Matrix* bank : {&conv->U_cal, &conv->V_cal, &conv->W_cal}) {
      if (unit(rng) >= 2.0 / 3.0) continue;
      const std::size_t k = bank->rows();
      const double mag = scale * std::pow(10.0, -3.0 * unit(rng));
      Matrix g = Matrix::identity(k);
      for (double& v : g.data()) v += mag * normal(rng);
      *bank = *bank * orthonormalize_columns(std::move(g));
    }
    return out;
  }
  for (Matrix* m : mutable_matrices(out.weights)) {
    if (unit(rng) >= 2.0 / 3.0) continue;
    const double mag = scale * std::pow(10.0, -3.0 * unit(rng));
    *m = *m + random_uniform(m->rows(), m->cols(), mag, rng);
  }
  return out;
}

namespace {

double lipschitz_trial(const Model& a, const Model& b, const Sequence& xs, double B_x) {
  const Trajectory ta = forward(a, xs);
  const Trajectory tb = forward(b, xs);
  double worst = 0.0;
  for (std::size_t t = 1; t <= ta.steps(); ++t) {
    Vector diff = ta.y[t - 1];
    axpy(-1.0, tb.y[t - 1], diff);
    worst = std::max(worst, check_ratio(norm2(diff), output_lipschitz_rhs(a, b, ta, tb, t, B_x)));
  }
  return worst;
}

}  // namespace

TrialReport verify_output_lipschitz(CellType cell, const WeightSampler& weights,
                                    const DataSampler& data, double scale, std::size_t trials,
                                    std::uint64_t seed) {
  if (!(scale > 0.0)) throw InvalidInput("verify_output_lipschitz: scale must be > 0");
  TrialReport rep{"output_lipschitz." + std::string(to_string(cell)), 0, 0, 0.0, seed};
  for (std::size_t i = 0; i < trials; ++i) {
    auto rng = trial_rng(seed, i);
    const Model a = weights.sample(cell, rng);
    const Model b = perturb(a, scale, rng);
    const Sequence xs = data.sample(input_dim(a), rng);
    rep.add(lipschitz_trial(a, b, xs, data.B_x));
  }
  return rep;
}

TrialReport verify_output_lipschitz(const Model& base, const SequenceDataset& data, double scale,
                                    std::size_t trials, std::uint64_t seed) {
  if (!(scale > 0.0)) throw InvalidInput("verify_output_lipschitz: scale must be > 0");
  if (data.m() == 0) throw InvalidInput("verify_output_lipschitz: empty dataset");
  TrialReport rep{"output_lipschitz." + std::string(to_string(base.cell())), 0, 0, 0.0, seed};
  for (std::size_t i = 0; i < trials; ++i) {
    auto rng = trial_rng(seed, i);
    const Model b = perturb(base, scale, rng);
    rep.add(lipschitz_trial(base, b, data.inputs[i % data.m()], data.B_x));
  }
  return rep;
}

MarginLipschitzReport verify_margin_lipschitz(std::size_t trials, std::size_t dim,
                                              std::uint64_t seed) {
  if (dim < 2) throw InvalidInput("verify_margin_lipschitz: dim must be >= 2");
  MarginLipschitzReport rep;
  rep.factor_two = {"margin_lipschitz.factor_two", 0, 0, 0.0, seed};
  rep.unit_constant = {"margin_lipschitz.unit_constant", 0, 0, 0.0, seed};
  for (std::size_t i = 0; i < trials; ++i) {
    Vector y(dim, 0.0), yp(dim, 0.0);
    int z = 1;
    if (i == 0) {
      // padding at -1 never wins the max, so the ratio is exactly sqrt(2)
      std::fill(y.begin(), y.end(), -1.0);
      std::fill(yp.begin(), yp.end(), -1.0);
      y[0] = 1.0, y[1] = -1.0;
      yp[0] = -1.0, yp[1] = 1.0;
    } else {
      auto rng = trial_rng(seed, i);
      std::normal_distribution<double> normal(0.0, 1.0);
      for (double& v : y) v = normal(rng);
      const double s = std::pow(10.0, std::uniform_real_distribution<double>(-3.0, 0.0)(rng));
      for (std::size_t k = 0; k < dim; ++k) yp[k] = y[k] + s * normal(rng);
      z = static_cast<int>(std::uniform_int_distribution<std::size_t>(1, dim)(rng));
    }
    const double lhs = std::abs(margin(y, z) - margin(yp, z));
    Vector diff = y;
    axpy(-1.0, yp, diff);
    const double n = norm2(diff);
    rep.factor_two.add(check_ratio(lhs, 2.0 * n));
    rep.unit_constant.add(check_ratio(lhs, n));
  }
  return rep;
}

TrialReport verify_conv_orthogonality(std::size_t k, std::size_t d, std::size_t trials,
                                      std::uint64_t seed, bool scaled) {
  if (k == 0 || k > d) throw InvalidInput("verify_conv_orthogonality: need 1 <= k <= d");
  TrialReport rep{scaled ? "conv_orthogonality" : "conv_orthogonality.unscaled", 0, 0, 0.0, seed};
  const double f = scaled ? 1.0 / std::sqrt(static_cast<double>(k)) : 1.0;
  for (std::size_t i = 0; i < trials; ++i) {
    auto rng = trial_rng(seed, i);
    const ConvOperator op = build_conv_operator(random_orthogonal(k, rng) * f, d);
    const Matrix gram = op.stacked.transposed() * op.stacked;
    double off = 0.0;
    for (std::size_t r = 0; r < gram.rows(); ++r)
      for (std::size_t c = 0; c < gram.cols(); ++c)
        if (r != c) off = std::max(off, std::abs(gram(r, c)));
    const double worst = std::max({off / kOffDiagTolerance,
                                   spec(op.stacked) / (1.0 + kSpectralSlack),
                                   spec(op.pooling)});
    rep.add(worst);
  }
  return rep;
}

ErcEstimate erc_from_responses(const std::vector<Vector>& responses, std::size_t draws,
                               bool enumerate, std::uint64_t seed) {
  if (responses.empty()) throw InvalidInput("erc: need at least one candidate");
  const std::size_t m = responses.front().size();
  if (m == 0) throw InvalidInput("erc: empty sample");
  for (const Vector& r : responses)
    if (r.size() != m) throw InvalidInput("erc: candidate responses differ in length");
  if (enumerate && m > 24) throw InvalidInput("erc: enumeration limited to m <= 24");
  if (!enumerate && draws == 0) throw InvalidInput("erc: draws must be >= 1");

  const std::size_t n = enumerate ? (std::size_t{1} << m) : draws;
  auto rng = trial_rng(seed, 0x5167u);
  std::bernoulli_distribution coin(0.5);
  Vector eps(m);
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < m; ++i) {
      const bool plus = enumerate ? ((k >> i) & 1u) != 0 : coin(rng);
      eps[i] = plus ? 1.0 : -1.0;
    }
    double best = -std::numeric_limits<double>::infinity();
    for (const Vector& r : responses) best = std::max(best, dot(eps, r));
    best /= static_cast<double>(m);
    sum += best;
    sum_sq += best * best;
  }
  ErcEstimate e;
  const double nd = static_cast<double>(n);
  e.estimate = sum / nd;
  e.std_error = n > 1 ? std::sqrt(std::max(0.0, (sum_sq - nd * e.estimate * e.estimate) / (nd - 1.0)) / nd) : 0.0;
  e.rademacher_draws = n;
  e.candidates_per_draw = responses.size();
  e.seed = seed;
  return e;
}

Model VanillaClassSampler::sample(std::mt19937_64& rng) const { return sample_vanilla_class(*this, rng); }

void VanillaClassSampler::project(VanillaWeights& w) const {
  auto clip = [](Matrix& m, double cap) {
    const double s = spectral_norm(m);
    if (s > cap) m *= cap / s;
  };
  clip(w.U, cap_U);
  clip(w.V, cap_V);
  clip(w.W, cap_W);
}

ErcEstimate estimate_erc_mc(const VanillaClassSampler& cls, const SequenceDataset& data,
                            std::size_t t, double gamma, const ErcConfig& cfg) {
  if (data.m() == 0) throw InvalidInput("estimate_erc_mc: empty dataset");
  if (cfg.candidates == 0) throw InvalidInput("estimate_erc_mc: candidates must be >= 1");
  if (!cfg.enumerate_signs && cfg.draws == 0) throw InvalidInput("estimate_erc_mc: draws must be >= 1");
  if (cls.dims.d_x != data.d_x) throw InvalidInput("estimate_erc_mc: class d_x does not match data");

  std::vector<Model> pool;
  std::vector<Vector> responses;
  pool.reserve(cfg.candidates);
  for (std::size_t c = 0; c < cfg.candidates; ++c) {
    auto rng = trial_rng(cfg.seed, c);
    pool.push_back(cls.sample(rng));
    responses.push_back(responses_of(pool.back(), data, t, gamma));
  }
  if (!cfg.refine) return erc_from_responses(responses, cfg.draws, cfg.enumerate_signs, cfg.seed);

  // Refinement needs the sign vectors explicitly, so redo the draw loop here
  // with the same sign stream as erc_from_responses.
  const std::size_t m = data.m();
  const std::size_t n = cfg.enumerate_signs ? (std::size_t{1} << m) : cfg.draws;
  if (cfg.enumerate_signs && m > 24) throw InvalidInput("erc: enumeration limited to m <= 24");
  auto rng = trial_rng(cfg.seed, 0x5167u);
  std::bernoulli_distribution coin(0.5);
  const double md = static_cast<double>(m);
  Vector eps(m);
  double sum = 0.0, sum_sq = 0.0;
  static constexpr double kSteps[] = {0.1, 0.03, 0.01};
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < m; ++i) {
      const bool plus = cfg.enumerate_signs ? ((k >> i) & 1u) != 0 : coin(rng);
      eps[i] = plus ? 1.0 : -1.0;
    }
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(pool.size());
    for (std::size_t c = 0; c < pool.size(); ++c) scored.emplace_back(dot(eps, responses[c]) / md, c);
    const std::size_t top = std::min(cfg.refine_top, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<long>(top), scored.end(),
                      [](const auto& x, const auto& y) { return x.first > y.first; });
    double best = scored.front().first;
    for (std::size_t j = 0; j < top; ++j) {
      Model cur = pool[scored[j].second];
      double cur_val = scored[j].first;
      auto& w = std::get<VanillaWeights>(cur.weights);
      for (double step : kSteps) {
        for (int which = 0; which < 3; ++which) {
          const std::size_t size = select(w, which).data().size();
          for (std::size_t idx = 0; idx < size; ++idx) {
            for (double sgn : {1.0, -1.0}) {
              Model trial = cur;
              auto& tw = std::get<VanillaWeights>(trial.weights);
              select(tw, which).data()[idx] += sgn * step;
              cls.project(tw);
              const double v = dot(eps, responses_of(trial, data, t, gamma)) / md;
              if (v > cur_val) {
                cur_val = v;
                w = std::move(tw);
              }
            }
          }
        }
      }
      best = std::max(best, cur_val);
    }
    sum += best;
    sum_sq += best * best;
  }
  ErcEstimate e;
  const double nd = static_cast<double>(n);
  e.estimate = sum / nd;
  e.std_error = n > 1 ? std::sqrt(std::max(0.0, (sum_sq - nd * e.estimate * e.estimate) / (nd - 1.0)) / nd) : 0.0;
  e.rademacher_draws = n;
  e.candidates_per_draw = pool.size();
  e.seed = cfg.seed;
  return e;
}

}  // namespace rnngen
