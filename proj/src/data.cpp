// SPDX-License-Identifier: Apache-2.0
#include "rnngen/data.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "rnngen/errors.hpp"

namespace rnngen {

namespace {

constexpr double kBoundaryMargin = 0.05;
constexpr int kMaxResamples = 200;

// Direction uniform on the sphere, radius B_x·√u. ‖x‖ ≤ B_x holds exactly.
Vector sample_input(std::mt19937_64& rng, std::size_t d_x, double B_x) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector x(d_x);
  double n = 0.0;
  while (n == 0.0) {
    for (double& v : x) v = normal(rng);
    n = norm2(x);
  }
  const double radius = B_x * std::sqrt(unit(rng));
  for (double& v : x) v *= radius / n;
  // Rounding can push the norm a hair over the budget.
  const double after = norm2(x);
  if (after > B_x) {
    for (double& v : x) v *= B_x / after;
  }
  return x;
}

Matrix uniform_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = u(rng);
  return m;
}

Matrix with_spectral(Matrix m, double target) {
  const double s = spectral_norm(m);
  return s > 0.0 ? m * (target / s) : m;
}

int argmax_label(std::span<const double> y) {
  return static_cast<int>(std::max_element(y.begin(), y.end()) - y.begin()) + 1;
}

int running_sign_label(double s, int K) {
  const double u = std::tanh(s);
  const int bin = static_cast<int>(std::floor((u + 1.0) * K / 2.0));
  return std::clamp(bin, 0, K - 1) + 1;
}

double distance_to_boundary(double s, int K) {
  const double u = std::tanh(s);
  double best = 1.0;
  for (int j = 1; j < K; ++j) best = std::min(best, std::abs(u - (-1.0 + 2.0 * j / K)));
  return best;
}

}  // namespace

void SequenceDataset::validate() const {
  if (K < 2) throw InvalidInput("dataset: K must be >= 2");
  if (!(B_x > 0.0) || !std::isfinite(B_x)) throw InvalidInput("dataset: B_x must be positive");
  if (labels.size() != inputs.size()) throw InvalidInput("dataset: labels/inputs count mismatch");
  const std::size_t len = T();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].size() != len || labels[i].size() != len) {
      throw InvalidInput("dataset: sequence " + std::to_string(i) + " has the wrong length");
    }
    for (std::size_t t = 0; t < len; ++t) {
      const Vector& x = inputs[i][t];
      if (x.size() != d_x) throw InvalidInput("dataset: input dimension mismatch");
      for (double v : x)
        if (!std::isfinite(v)) throw InvalidInput("dataset: non-finite input");
      const int z = labels[i][t];
      if (z < 1 || z > K) {
        throw InvalidInput("dataset: label " + std::to_string(z) + " out of range 1.." +
                           std::to_string(K));
      }
    }
  }
}

std::string_view to_string(LabelRule rule) {
  return rule == LabelRule::teacher ? "teacher" : "running-sign";
}

LabelRule label_rule_from_string(std::string_view name) {
  if (name == "teacher") return LabelRule::teacher;
  if (name == "running-sign" || name == "running_sign") return LabelRule::running_sign;
  throw InvalidInput("unknown label rule '" + std::string(name) + "'");
}

SyntheticData gen_synthetic(std::size_t m, std::size_t T, std::size_t d_x, int K,
                            LabelRule rule, std::uint64_t seed, double B_x) {
  if (K < 2) throw InvalidInput("gen_synthetic: K must be >= 2");
  if (m == 0 || T == 0 || d_x == 0) throw InvalidInput("gen_synthetic: m, T, d_x must be positive");
  if (!(B_x > 0.0) || !std::isfinite(B_x)) throw InvalidInput("gen_synthetic: B_x must be positive");

  std::mt19937_64 rng(seed);
  SyntheticData out;
  SequenceDataset& ds = out.data;
  ds.d_x = d_x;
  ds.K = K;
  ds.B_x = B_x;
  ds.seed = seed;
  ds.inputs.resize(m);
  ds.labels.resize(m);

  if (rule == LabelRule::teacher) {
    const std::size_t d_h = std::max<std::size_t>(4, static_cast<std::size_t>(K));
    VanillaWeights w{with_spectral(uniform_matrix(rng, d_h, d_h), 0.9),
                     with_spectral(uniform_matrix(rng, static_cast<std::size_t>(K), d_h), 3.0),
                     with_spectral(uniform_matrix(rng, d_h, d_x), 2.0 / B_x)};
    const Activation sh = Activation::tanh();
    const Activation sy = Activation::identity();
    for (std::size_t i = 0; i < m; ++i) {
      Vector h(d_h, 0.0);
      for (std::size_t t = 0; t < T; ++t) {
        // Keep the sample whose teacher margin is largest, stop once it is clear.
        Vector best_x, best_h;
        double best_margin = -1.0;
        for (int tries = 0; tries < kMaxResamples; ++tries) {
          Vector x = sample_input(rng, d_x, B_x);
          Vector pre = matvec(w.U, h);
          axpy(1.0, matvec(w.W, x), pre);
          sh.apply(pre);
          const Vector y = matvec(w.V, pre);
          const double mg = margin(y, argmax_label(y));
          if (mg > best_margin) {
            best_margin = mg;
            best_x = std::move(x);
            best_h = std::move(pre);
          }
          if (best_margin >= kBoundaryMargin) break;
        }
        h = std::move(best_h);
        ds.labels[i].push_back(argmax_label(matvec(w.V, h)));
        ds.inputs[i].push_back(std::move(best_x));
      }
    }
    out.teacher = Model{std::move(w), sh, sy};
  } else {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector dir(d_x);
    for (double& v : dir) v = normal(rng);
    const double n = norm2(dir);
    for (double& v : dir) v /= n;
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        Vector x;
        double next = s;
        for (int tries = 0; tries < kMaxResamples; ++tries) {
          x = sample_input(rng, d_x, B_x);
          next = s + dot(dir, x);
          if (distance_to_boundary(next, K) >= kBoundaryMargin) break;
        }
        s = next;
        ds.labels[i].push_back(running_sign_label(s, K));
        ds.inputs[i].push_back(std::move(x));
      }
    }
  }
  ds.validate();
  return out;
}

std::vector<LabeledOutput> outputs_at(const Model& model, const SequenceDataset& data,
                                      std::size_t t) {
  if (t < 1 || t > data.T()) {
    throw InvalidInput("outputs_at: t = " + std::to_string(t) + " outside 1.." +
                       std::to_string(data.T()));
  }
  std::vector<LabeledOutput> out;
  out.reserve(data.m());
  for (std::size_t i = 0; i < data.m(); ++i) {
    const Sequence prefix(data.inputs[i].begin(), data.inputs[i].begin() + static_cast<long>(t));
    Trajectory tr = forward(model, prefix);
    out.push_back({std::move(tr.y.back()), data.labels[i][t - 1]});
  }
  return out;
}

std::pair<SequenceDataset, SequenceDataset> split_half(const SequenceDataset& data) {
  SequenceDataset a = data, b = data;
  const std::size_t cut = (data.m() + 1) / 2;
  a.inputs.assign(data.inputs.begin(), data.inputs.begin() + static_cast<long>(cut));
  a.labels.assign(data.labels.begin(), data.labels.begin() + static_cast<long>(cut));
  b.inputs.assign(data.inputs.begin() + static_cast<long>(cut), data.inputs.end());
  b.labels.assign(data.labels.begin() + static_cast<long>(cut), data.labels.end());
  return {std::move(a), std::move(b)};
}

double max_input_norm(const SequenceDataset& data) {
  double best = 0.0;
  for (const Sequence& seq : data.inputs)
    for (const Vector& x : seq) best = std::max(best, norm2(x));
  return best;
}

}  // namespace rnngen
