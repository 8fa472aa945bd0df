// SPDX-License-Identifier: Apache-2.0
#include "rnngen/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rnngen/errors.hpp"

namespace rnngen {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kUnitTolerance = 1e-12;
const double kLogMax = std::log(std::numeric_limits<double>::max());

// log with log(0) = −inf and log(inf) = inf.
double ln(double x) { return x > 0.0 ? std::log(x) : -kInf; }

// log(max(arg, e)) from log(arg).
double clamped_log(double log_arg) { return std::max(1.0, log_arg); }

double logaddexp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(-std::abs(a - b)));
}

// log(1 + e^z) without overflow.
double softplus(double z) {
  if (z == -kInf) return 0.0;
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

void set_value(BoundReport& r, double log_value) {
  r.log_value = log_value;
  if (log_value > kLogMax) {
    r.value = kInf;
    r.overflow = true;
  } else {
    r.value = std::exp(log_value);
  }
}

BoundReport base_report(const BoundQuery& q, std::string id, double beta, bool order_only) {
  BoundReport r;
  r.id = std::move(id);
  r.order_only = order_only;
  r.width = q.profile.width;
  r.beta = beta;
  r.regime = regime_classify(beta);
  r.t = q.t;
  r.m = q.m;
  r.gamma = q.gamma;
  r.K = q.K;
  return r;
}

std::size_t max_dim(const Dims& d) { return std::max({d.d_x, d.d_h, d.d_y}); }

// Quantities shared by the vanilla ERC bound, its covering number and the
// Dudley integral, all in log space.
struct VanillaTerms {
  double beta;
  GeomRatio ratio;
  double d;
  double log_lambda;  // log λ_t = log min{b√d, ρ_h B_W B_x·ratio}
  double log_r;
  double log_c;
  double log_x;  // log(c √d t·ratio)
};

VanillaTerms vanilla_terms(const BoundQuery& q) {
  q.validate();
  const NormProfile& p = q.profile;
  const double B_U = p.at("U").spectral;
  const double B_V = p.at("V").spectral;
  const double B_W = p.at("W").spectral;
  VanillaTerms v;
  v.beta = q.rho_h * B_U;
  v.ratio = geometric_ratio(v.beta, q.t);
  v.d = p.width;
  v.log_lambda = std::min(ln(q.b) + 0.5 * ln(v.d),
                          ln(q.rho_h * B_W * p.B_x) + v.ratio.log_value);
  v.log_r = ln(q.rho_y * B_V) + v.log_lambda;
  v.log_c = ln(q.rho_y * q.rho_h * B_V * B_W * p.B_x) + ln(std::max(1.0, v.beta));
  v.log_x = v.log_c + 0.5 * ln(v.d) + ln(q.t) + v.ratio.log_value;
  return v;
}

double exp_or_zero(double log_x) { return log_x == -kInf ? 0.0 : std::exp(log_x); }

}  // namespace

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::I: return "I";
    case Regime::II: return "II";
    case Regime::III: return "III";
  }
  return "?";
}

Regime regime_classify(double beta) {
  if (beta < 1.0 - kUnitTolerance) return Regime::I;
  if (beta > 1.0 + kUnitTolerance) return Regime::III;
  return Regime::II;
}

std::string_view regime_order(Regime r) {
  switch (r) {
    case Regime::I: return "d/(sqrt(m)*gamma)";
    case Regime::II: return "d*t/(sqrt(m)*gamma)";
    case Regime::III: return "sqrt(d^3*t)/(sqrt(m)*gamma)";
  }
  return "?";
}

void BoundQuery::validate() const {
  if (t < 1) throw InvalidInput("bound query: t must be >= 1");
  if (m < 1) throw InvalidInput("bound query: m must be >= 1");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidInput("bound query: gamma must be > 0");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("bound query: delta must lie in (0, 1)");
  if (!(rho_h >= 0.0) || !std::isfinite(rho_h) || !(rho_y >= 0.0) || !std::isfinite(rho_y)) {
    throw InvalidInput("bound query: Lipschitz constants must be finite and >= 0");
  }
  if (!(b > 0.0)) throw InvalidInput("bound query: b must be > 0");
  if (!(profile.width > 0.0)) throw InvalidInput("bound query: profile width must be > 0");
  if (!(profile.B_x >= 0.0) || !std::isfinite(profile.B_x)) {
    throw InvalidInput("bound query: B_x must be finite and >= 0");
  }
}

BoundQuery make_query(const Model& model, NormProfile profile, int t, std::size_t m,
                      double gamma, double delta) {
  BoundQuery q;
  const bool gated = model.cell() == CellType::mgu || model.cell() == CellType::lstm;
  const Activation sh = gated ? Activation::tanh() : model.sigma_h;
  q.profile = std::move(profile);
  q.rho_h = sh.rho;
  q.b = sh.b;
  q.rho_y = model.sigma_y.rho;
  q.t = t;
  q.m = m;
  q.gamma = gamma;
  q.delta = delta;
  q.validate();
  return q;
}

BoundReport vanilla_erc_bound(const BoundQuery& q) {
  const VanillaTerms v = vanilla_terms(q);
  BoundReport r = base_report(q, "vanilla_erc", v.beta, false);
  r.ratio = v.ratio;
  r.lambda_t = exp_or_zero(v.log_lambda);
  r.range_r = exp_or_zero(v.log_r);
  r.c = exp_or_zero(v.log_c);

  const double m = static_cast<double>(q.m);
  const double log_arg = std::log(24.0) + v.log_x + 0.5 * std::log(m);
  // 24/(√m γ)·√3·d·r·√log(...)
  const double log_chain = std::log(24.0) - 0.5 * std::log(m) - std::log(q.gamma) +
                           0.5 * std::log(3.0) + ln(v.d) + v.log_r +
                           0.5 * std::log(clamped_log(log_arg));
  set_value(r, logaddexp(std::log(4.0 / (m * q.gamma)), log_chain));
  return r;
}

double vanilla_generalization_bound(const BoundQuery& q, double empirical_ramp_risk) {
  if (!(empirical_ramp_risk >= 0.0 && empirical_ramp_risk <= 1.0)) {
    throw InvalidInput("generalization bound: empirical risk must lie in [0, 1]");
  }
  const BoundReport erc = vanilla_erc_bound(q);
  const double m = static_cast<double>(q.m);
  return empirical_ramp_risk + 2.0 * erc.value + 3.0 * std::sqrt(std::log(2.0 / q.delta) / (2.0 * m));
}

BoundReport refined_21_bound(const BoundQuery& q, bool squared_21) {
  q.validate();
  const NormProfile& p = q.profile;
  const MatrixNorms& U = p.at("U");
  const MatrixNorms& V = p.at("V");
  const MatrixNorms& W = p.at("W");
  const double beta = q.rho_h * U.spectral;
  BoundReport r = base_report(q, squared_21 ? "refined_21_squared" : "refined_21", beta, false);
  r.ratio = geometric_ratio(beta, q.t);

  // log a_t, then the three output Lipschitz constants.
  const double log_a = ln(q.rho_y * q.rho_h * p.B_x) + r.ratio.log_value;
  const double log_LU = ln(q.rho_h * V.spectral * W.spectral) + ln(q.t) + log_a;
  const double log_LV = ln(W.spectral) + log_a;
  const double log_LW = ln(V.spectral) + log_a;
  const double pw = squared_21 ? 2.0 : 1.0;
  double log_sum = -kInf;
  log_sum = logaddexp(log_sum, pw * ln(U.two_one) + 2.0 * log_LU);
  log_sum = logaddexp(log_sum, pw * ln(V.two_one) + 2.0 * log_LV);
  log_sum = logaddexp(log_sum, pw * ln(W.two_one) + 2.0 * log_LW);

  const double d = static_cast<double>(max_dim(p.dims));
  const double m = static_cast<double>(q.m);
  const double log_chain = std::log(432.0) - std::log(q.gamma) - 0.5 * std::log(m) +
                           0.5 * log_sum +
                           0.5 * std::log(clamped_log(std::log(2.0 * d * d))) +
                           std::log(clamped_log(std::log(2.0 * m) + 0.5 * std::log(d)));
  r.lambda_t = exp_or_zero(log_a);
  set_value(r, logaddexp(std::log(4.0 / (m * q.gamma)), log_chain));
  return r;
}

BoundReport pacbayes_bound(const BoundQuery& q) {
  q.validate();
  if (q.m < 2) throw InvalidInput("pacbayes_bound: m must be >= 2");
  const NormProfile& p = q.profile;
  const MatrixNorms& U = p.at("U");
  const MatrixNorms& V = p.at("V");
  const MatrixNorms& W = p.at("W");
  const double beta = q.rho_h * U.spectral;
  BoundReport r = base_report(q, "pacbayes", beta, true);
  r.ratio = geometric_ratio(beta, q.t);

  const double d = static_cast<double>(max_dim(p.dims));
  const double log_alpha = ln(q.rho_h * q.rho_y * W.spectral * p.B_x);
  const double log_lambda =
      std::min(ln(q.b) + 0.5 * std::log(d), ln(q.rho_h * p.B_x * W.spectral) + r.ratio.log_value);
  const double log_sf = ln(U.frobenius + V.frobenius + W.frobenius);
  r.lambda_t = exp_or_zero(log_lambda);
  set_value(r, log_alpha + ln(U.spectral) + log_lambda + log_sf + r.ratio.log_value +
                   0.5 * (std::log(d) + std::log(clamped_log(std::log(d)))) -
                   0.5 * std::log(static_cast<double>(q.m)) - std::log(q.gamma));
  return r;
}

double pacbayes_gap(double kl, std::size_t m, double delta) {
  if (m < 2) throw InvalidInput("pacbayes_gap: m must be >= 2");
  if (!(kl >= 0.0)) throw InvalidInput("pacbayes_gap: KL must be >= 0");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("pacbayes_gap: delta must lie in (0, 1)");
  const double md = static_cast<double>(m);
  return 4.0 * std::sqrt((kl + std::log(6.0 * md / delta)) / (md - 1.0));
}

std::array<BoundReport, 4> comparison_bounds(const BoundQuery& q) {
  q.validate();
  const NormProfile& p = q.profile;
  const MatrixNorms& U = p.at("U");
  const MatrixNorms& V = p.at("V");
  const MatrixNorms& W = p.at("W");
  const double d = p.width;
  const GeomRatio R = geometric_ratio(U.spectral, q.t);
  const double log_g = std::log(q.gamma);
  const double log_min = std::min(0.5 * std::log(d), ln(W.spectral) + R.log_value);

  std::array<BoundReport, 4> out{base_report(q, "ours", U.spectral, true),
                                 base_report(q, "bound1", U.spectral, true),
                                 base_report(q, "bound2", U.spectral, true),
                                 base_report(q, "bound3", U.spectral, true)};
  for (auto& r : out) {
    r.ratio = R;
    r.lambda_t = exp_or_zero(log_min);
  }

  // d B_V min{√d, B_W R} √log R
  set_value(out[0], std::log(d) + ln(V.spectral) + log_min +
                        0.5 * std::log(clamped_log(R.log_value)) - log_g);
  // d t² B_V B_W max{1, B_U^t}
  set_value(out[1], std::log(d) + 2.0 * std::log(q.t) + ln(V.spectral) + ln(W.spectral) +
                        q.t * std::max(0.0, ln(U.spectral)) - log_g);
  // B_V B_W (M_U + M_V + M_W) t R
  set_value(out[2], ln(V.spectral) + ln(W.spectral) + ln(U.two_one + V.two_one + W.two_one) +
                        std::log(q.t) + R.log_value - log_g);
  // (min{√d, B_W R} B_U + B_W) R √(d ΣF²)
  const double f2 = U.frobenius * U.frobenius + V.frobenius * V.frobenius +
                    W.frobenius * W.frobenius;
  set_value(out[3], logaddexp(log_min + ln(U.spectral), ln(W.spectral)) + R.log_value +
                        0.5 * (std::log(d) + ln(f2)) - log_g);
  return out;
}

double log_ratio(const BoundReport& a, const BoundReport& b) { return a.log_value - b.log_value; }

namespace {

BoundReport gated_bound(const BoundQuery& q, std::string id, std::string_view w_name) {
  q.validate();
  const NormProfile& p = q.profile;
  if (!p.gates) throw InvalidInput(id + ": gate statistics (beta, theta) are required");
  const double B_V = p.at("V").spectral;
  const double B_W = p.at(w_name).spectral;
  const GateStats g = *p.gates;
  BoundReport r = base_report(q, std::move(id), g.beta, true);
  r.ratio = geometric_ratio(g.beta, q.t);
  const GeomRatio R_theta = geometric_ratio(g.theta, q.t);

  const double d = p.width;
  const double m = static_cast<double>(q.m);
  const double log_min = std::min(0.5 * std::log(d), ln(B_W * p.B_x) + r.ratio.log_value);
  r.lambda_t = exp_or_zero(log_min);
  const double log_arg = R_theta.log_value + std::log(d) + 0.5 * std::log(m);
  set_value(r, std::log(d) + ln(q.rho_y * B_V) + log_min +
                   0.5 * std::log(clamped_log(log_arg)) - 0.5 * std::log(m) -
                   std::log(q.gamma));
  return r;
}

}  // namespace

BoundReport mgu_bound(const BoundQuery& q) { return gated_bound(q, "mgu", "W_h"); }

BoundReport lstm_bound(const BoundQuery& q) { return gated_bound(q, "lstm", "W_c"); }

BoundReport conv_bound(const BoundQuery& q) {
  q.validate();
  const NormProfile& p = q.profile;
  if (p.k == 0) throw InvalidInput("conv_bound: profile has no filter count k");
  BoundReport r = base_report(q, "conv", 0.0, true);
  r.ratio = geometric_ratio(1.0, q.t);
  const double m = static_cast<double>(q.m);
  const double log_arg = std::log(p.width) + std::log(q.t) + 0.5 * std::log(m);
  set_value(r, ln(p.B_x) + std::log(static_cast<double>(p.k)) + std::log(q.t) +
                   0.5 * std::log(clamped_log(log_arg)) - 0.5 * std::log(m) -
                   std::log(q.gamma));
  return r;
}

double covering_log(const BoundQuery& q, double eps, bool small_eps) {
  if (!(eps > 0.0)) throw InvalidInput("covering_log: eps must be > 0");
  const VanillaTerms v = vanilla_terms(q);
  const double scale = 3.0 * v.d * v.d;
  if (small_eps) {
    return std::max(0.0, scale * (std::log(12.0) + v.log_x - std::log(eps)));
  }
  return scale * softplus(std::log(6.0) + v.log_x - std::log(eps));
}

double matrix_covering_log(std::size_t d1, std::size_t d2, double lambda, double eps) {
  if (!(eps > 0.0)) throw InvalidInput("matrix_covering_log: eps must be > 0");
  if (!(lambda >= 0.0)) throw InvalidInput("matrix_covering_log: lambda must be >= 0");
  const double root = std::sqrt(static_cast<double>(std::min(d1, d2)));
  return static_cast<double>(d1 * d2) * std::log1p(2.0 * root * lambda / eps);
}

DudleyResult dudley_erc(const std::function<double(double)>& covering_log_fn, double r,
                        std::size_t m, std::size_t grid_points, std::size_t quadrature_points) {
  if (m < 1) throw InvalidInput("dudley_erc: m must be >= 1");
  if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidInput("dudley_erc: r must be finite and >= 0");
  if (grid_points < 2 || quadrature_points < 1024) {
    throw InvalidInput("dudley_erc: need >= 2 grid points and >= 1024 quadrature points");
  }
  const double sm = std::sqrt(static_cast<double>(m));
  const double upper = 2.0 * r * sm;
  const double lo = 1e-6 / sm;
  const double hi = std::max(upper, 1.0 / sm);

  auto objective = [&](double alpha) {
    double integral = 0.0;
    if (alpha < upper) {
      // ε = α e^u, dε = ε du; midpoint rule in u.
      const double span = std::log(upper / alpha);
      const double h = span / static_cast<double>(quadrature_points);
      for (std::size_t i = 0; i < quadrature_points; ++i) {
        const double eps = alpha * std::exp((static_cast<double>(i) + 0.5) * h);
        integral += std::sqrt(std::max(0.0, covering_log_fn(eps))) * eps;
      }
      integral *= h;
    }
    return 4.0 * alpha / sm + 12.0 / static_cast<double>(m) * integral;
  };

  DudleyResult best{objective(1.0 / sm), 1.0 / sm};
  const double step = std::log(hi / lo) / static_cast<double>(grid_points - 1);
  for (std::size_t i = 0; i < grid_points; ++i) {
    const double alpha = lo * std::exp(step * static_cast<double>(i));
    const double v = objective(alpha);
    if (v < best.value) best = {v, alpha};
  }
  return best;
}

DudleyResult vanilla_dudley_erc(const BoundQuery& q, std::size_t grid_points,
                                std::size_t quadrature_points) {
  const VanillaTerms v = vanilla_terms(q);
  DudleyResult res = dudley_erc([&](double eps) { return covering_log(q, eps / 2.0); },
                                exp_or_zero(v.log_r), q.m, grid_points, quadrature_points);
  res.value /= q.gamma;
  return res;
}

}  // namespace rnngen
