// SPDX-License-Identifier: Apache-2.0
#include "rnngen/norm_audit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "rnngen/errors.hpp"

namespace rnngen {

namespace {

constexpr double kOrthogonalityTolerance = 1e-10;

double max_abs_deviation(const Matrix& gram, double diag) {
  double worst = 0.0;
  for (std::size_t i = 0; i < gram.rows(); ++i)
    for (std::size_t j = 0; j < gram.cols(); ++j)
      worst = std::max(worst, std::abs(gram(i, j) - (i == j ? diag : 0.0)));
  return worst;
}

}  // namespace

double MatrixNorms::stable_rank() const { return spectral > 0.0 ? frobenius / spectral : 1.0; }

double MatrixNorms::two_one_over_frobenius() const {
  return frobenius > 0.0 ? two_one / frobenius : 1.0;
}

MatrixNorms measure(std::string name, const Matrix& m) {
  MatrixNorms n;
  n.name = std::move(name);
  n.rows = m.rows();
  n.cols = m.cols();
  n.spectral = spectral_norm(m);
  n.frobenius = frobenius_norm(m);
  n.two_one = two_one_norm(m);
  // Power iteration converges from below; keep the chain B ≤ B_F exact.
  n.spectral = std::min(n.spectral, n.frobenius);
  return n;
}

bool NormProfile::has(std::string_view name) const {
  return std::any_of(matrices.begin(), matrices.end(),
                     [&](const MatrixNorms& n) { return n.name == name; });
}

const MatrixNorms& NormProfile::at(std::string_view name) const {
  for (const auto& n : matrices)
    if (n.name == name) return n;
  throw InvalidInput("norm profile has no entry for matrix '" + std::string(name) + "'");
}

NormProfile audit(const Model& model) {
  NormProfile p;
  p.cell = model.cell();
  p.dims = validate(model.weights);
  for (const NamedMatrix& nm : named_matrices(model.weights)) {
    p.matrices.push_back(measure(std::string(nm.name), *nm.matrix));
  }
  const auto [dx, dh, dy] = p.dims;
  switch (p.cell) {
    case CellType::vanilla:
      p.width = std::sqrt(static_cast<double>(dx * dh + dh * dh + dh * dy));
      break;
    case CellType::mgu:
    case CellType::lstm:
      p.width = static_cast<double>(std::max({dx, dh, dy}));
      break;
    case CellType::conv:
      p.width = static_cast<double>(std::get<ConvWeights>(model.weights).d);
      p.k = std::get<ConvWeights>(model.weights).k();
      break;
  }
  return p;
}

NormProfile audit(const Model& model, const SequenceDataset& data) {
  NormProfile p = audit(model);
  p.B_x = data.B_x;
  if (p.cell == CellType::mgu || p.cell == CellType::lstm) p.gates = gate_stats(model, data);
  return p;
}

NormProfile vanilla_profile(Dims dims, double B_U, double B_V, double B_W, double B_x) {
  NormProfile p;
  p.cell = CellType::vanilla;
  p.dims = dims;
  const auto [dx, dh, dy] = dims;
  p.matrices = {{"U", dh, dh, B_U, B_U, B_U}, {"V", dy, dh, B_V, B_V, B_V}, {"W", dh, dx, B_W, B_W, B_W}};
  p.width = std::sqrt(static_cast<double>(dx * dh + dh * dh + dh * dy));
  p.B_x = B_x;
  return p;
}

double mgu_beta(const Trajectory& tr, double B_Uh, std::size_t upto) {
  double beta = 0.0;
  for (std::size_t j = 0; j < std::min(upto, tr.r.size()); ++j) {
    double one_minus = 0.0;
    for (double r : tr.r[j]) one_minus = std::max(one_minus, std::abs(1.0 - r));
    const double rinf = norm_inf(tr.r[j]);
    beta = std::max(beta, one_minus + B_Uh * rinf * rinf);
  }
  return beta;
}

double lstm_beta(const Trajectory& tr, double B_Uc, std::size_t upto) {
  double beta = 0.0;
  for (std::size_t j = 0; j < std::min(upto, tr.g.size()); ++j) {
    beta = std::max(beta, norm_inf(tr.g[j]) + B_Uc * norm_inf(tr.r[j]) * norm_inf(tr.o[j]));
  }
  return beta;
}

GateStats gate_stats(const Model& model, const SequenceDataset& data) {
  if (data.m() == 0) throw InvalidInput("gate_stats: empty dataset");
  const CellType cell = model.cell();
  if (cell != CellType::mgu && cell != CellType::lstm) {
    throw InvalidInput("gate_stats: only defined for mgu and lstm cells");
  }
  const NormProfile p = audit(model);
  GateStats s;
  if (cell == CellType::mgu) {
    const double B_Uh = p.at("U_h").spectral;
    const double B_Ur = p.at("U_r").spectral;
    for (const Sequence& xs : data.inputs) {
      const Trajectory tr = forward(model, xs);
      s.beta = std::max(s.beta, mgu_beta(tr, B_Uh, tr.steps()));
    }
    s.theta = s.beta + 2.0 * B_Ur + B_Ur * B_Uh;
  } else {
    const double B_Uc = p.at("U_c").spectral;
    for (const Sequence& xs : data.inputs) {
      const Trajectory tr = forward(model, xs);
      s.beta = std::max(s.beta, lstm_beta(tr, B_Uc, tr.steps()));
    }
    s.theta = s.beta + p.at("U_g").spectral + p.at("U_r").spectral + p.at("U_o").spectral;
  }
  return s;
}

bool AssumptionReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const AssumptionCheck* AssumptionReport::find(std::string_view id) const {
  for (const auto& c : checks)
    if (c.id == id) return &c;
  return nullptr;
}

AssumptionReport check_assumptions(const Model& model, const SequenceDataset& data,
                                   const NormCaps& caps) {
  AssumptionReport report;
  const double max_norm = max_input_norm(data);
  report.checks.push_back({"input_bound", max_norm <= data.B_x, max_norm, data.B_x});

  const NormProfile p = audit(model);
  auto add_caps = [&](const auto& declared, const char* kind, auto measured_of) {
    for (const auto& [name, cap] : declared) {
      const double measured = p.has(name) ? measured_of(p.at(name)) : 0.0;
      report.checks.push_back(
          {std::string(kind) + "." + name, p.has(name) && measured <= cap, measured, cap});
    }
  };
  add_caps(caps.spectral, "spectral", [](const MatrixNorms& n) { return n.spectral; });
  add_caps(caps.two_one, "two_one", [](const MatrixNorms& n) { return n.two_one; });
  add_caps(caps.frobenius, "frobenius", [](const MatrixNorms& n) { return n.frobenius; });

  const bool gated = model.cell() == CellType::mgu || model.cell() == CellType::lstm;
  const double h0 = gated ? std::tanh(0.0) : model.sigma_h(0.0);
  report.checks.push_back({"sigma_h_zero", h0 == 0.0, std::abs(h0), 0.0});
  const double y0 = model.sigma_y(0.0);
  report.checks.push_back({"sigma_y_zero", y0 == 0.0, std::abs(y0), 0.0});

  if (const auto* conv = std::get_if<ConvWeights>(&model.weights)) {
    const double inv_k = 1.0 / static_cast<double>(conv->k());
    for (const NamedMatrix& nm : named_matrices(model.weights)) {
      const Matrix& f = *nm.matrix;
      const double dev = std::max(max_abs_deviation(f.transposed() * f, inv_k),
                                  max_abs_deviation(f * f.transposed(), inv_k));
      report.checks.push_back({"orthogonality." + std::string(nm.name),
                               dev <= kOrthogonalityTolerance, dev, kOrthogonalityTolerance});
    }
  }
  return report;
}

std::string format_ratio(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  const double rounded = std::floor(value * scale + 0.5) / scale;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, rounded);
  return buf;
}

}  // namespace rnngen
