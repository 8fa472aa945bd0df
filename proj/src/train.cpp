// SPDX-License-Identifier: Apache-2.0
#include "rnngen/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "rnngen/errors.hpp"
#include "rnngen/margin.hpp"

namespace rnngen {

namespace {

// σ'(pre) given pre and post activation values.
double derivative(const Activation& a, double pre, double post) {
  switch (a.kind) {
    case ActivationKind::tanh: return 1.0 - post * post;
    case ActivationKind::sigmoid: return post * (1.0 - post);
    case ActivationKind::relu: return pre > 0.0 ? 1.0 : 0.0;
    case ActivationKind::identity: return 1.0;
  }
  return 1.0;
}

// log-sum-exp softmax, returns probabilities and −log p_z.
double softmax_xent(const Vector& y, int z, Vector& probs) {
  const double hi = *std::max_element(y.begin(), y.end());
  probs.resize(y.size());
  double s = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) s += (probs[k] = std::exp(y[k] - hi));
  for (double& p : probs) p /= s;
  return -(y[static_cast<std::size_t>(z - 1)] - hi - std::log(s));
}

struct Unrolled {
  std::vector<Vector> pre;  // a_t = U h_{t-1} + W x_t
  std::vector<Vector> h;    // h_0 .. h_T
};

Unrolled unroll(const VanillaWeights& w, const Activation& sh, const Sequence& xs) {
  Unrolled u;
  u.h.emplace_back(w.U.rows(), 0.0);
  for (const Vector& x : xs) {
    Vector a = matvec(w.U, u.h.back());
    axpy(1.0, matvec(w.W, x), a);
    Vector h = a;
    sh.apply(h);
    u.pre.push_back(std::move(a));
    u.h.push_back(std::move(h));
  }
  return u;
}

void check_batch(const SequenceDataset& data, std::span<const std::size_t> batch) {
  if (batch.empty()) throw InvalidInput("training batch is empty");
  for (std::size_t i : batch)
    if (i >= data.m()) throw InvalidInput("training batch index out of range");
}

void add_outer(Matrix& G, std::span<const double> a, std::span<const double> b) {
  for (std::size_t r = 0; r < a.size(); ++r) {
    if (a[r] == 0.0) continue;
    for (std::size_t c = 0; c < b.size(); ++c) G(r, c) += a[r] * b[c];
  }
}

}  // namespace

Matrix scale_spectral(const Matrix& M, double target) {
  if (!(target >= 0.0) || !std::isfinite(target)) {
    throw InvalidInput("scale_spectral: target must be finite and >= 0");
  }
  if (target == 0.0) return Matrix(M.rows(), M.cols(), 0.0);
  const double s = spectral_norm(M);
  if (s == 0.0) throw InvalidInput("scale_spectral: cannot rescale a zero matrix to a positive norm");
  return M * (target / s);
}

double surrogate_loss(const VanillaWeights& w, const Activation& sigma_h,
                      const SequenceDataset& data, std::span<const std::size_t> batch) {
  check_batch(data, batch);
  double total = 0.0;
  Vector probs;
  for (std::size_t i : batch) {
    const Unrolled u = unroll(w, sigma_h, data.inputs[i]);
    total += softmax_xent(matvec(w.V, u.h.back()), data.labels[i].back(), probs);
  }
  return total / static_cast<double>(batch.size());
}

Gradients bptt_gradients(const VanillaWeights& w, const Activation& sigma_h,
                         const SequenceDataset& data, std::span<const std::size_t> batch) {
  check_batch(data, batch);
  Gradients g{Matrix(w.U.rows(), w.U.cols()), Matrix(w.V.rows(), w.V.cols()),
              Matrix(w.W.rows(), w.W.cols()), 0.0};
  const double scale = 1.0 / static_cast<double>(batch.size());
  Vector probs;
  for (std::size_t i : batch) {
    const Sequence& xs = data.inputs[i];
    const Unrolled u = unroll(w, sigma_h, xs);
    g.loss += scale * softmax_xent(matvec(w.V, u.h.back()), data.labels[i].back(), probs);

    // dL/dy = p − e_z
    Vector dy = probs;
    dy[static_cast<std::size_t>(data.labels[i].back() - 1)] -= 1.0;
    for (double& v : dy) v *= scale;
    add_outer(g.V, dy, u.h.back());

    Vector dh = matvec_transposed(w.V, dy);
    for (std::size_t t = xs.size(); t-- > 0;) {
      Vector da(dh.size());
      for (std::size_t k = 0; k < dh.size(); ++k) {
        da[k] = dh[k] * derivative(sigma_h, u.pre[t][k], u.h[t + 1][k]);
      }
      add_outer(g.U, da, u.h[t]);
      add_outer(g.W, da, xs[t]);
      dh = matvec_transposed(w.U, da);
    }
  }
  return g;
}

VanillaWeights init_vanilla(std::size_t d_x, std::size_t d_h, std::size_t d_y, double scale,
                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto draw = [&](std::size_t rows, std::size_t cols) {
    std::uniform_real_distribution<double> u(-scale / std::sqrt(static_cast<double>(cols)),
                                             scale / std::sqrt(static_cast<double>(cols)));
    Matrix m(rows, cols);
    for (double& v : m.data()) v = u(rng);
    return m;
  };
  VanillaWeights w;
  w.U = draw(d_h, d_h);
  w.V = draw(d_y, d_h);
  w.W = draw(d_h, d_x);
  return w;
}

TrainResult train_vanilla(const SequenceDataset& data, const TrainConfig& cfg) {
  data.validate();
  if (data.m() == 0) throw InvalidInput("train_vanilla: empty dataset");
  if (!(cfg.learning_rate >= 0.0)) throw InvalidInput("train_vanilla: learning rate must be >= 0");
  if (cfg.epochs < 0) throw InvalidInput("train_vanilla: epochs must be >= 0");
  if (cfg.batch_size == 0) throw InvalidInput("train_vanilla: batch size must be >= 1");
  if (cfg.d_h == 0) throw InvalidInput("train_vanilla: d_h must be >= 1");

  VanillaWeights w = init_vanilla(data.d_x, cfg.d_h, static_cast<std::size_t>(data.K),
                                  cfg.init_scale, cfg.seed);
  if (cfg.target_spectral_U) w.U = scale_spectral(w.U, *cfg.target_spectral_U);

  TrainResult res;
  std::vector<std::size_t> order(data.m());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  auto log_epoch = [&](int epoch, const VanillaWeights& cur) {
    const Model model{cur, cfg.sigma_h, Activation::identity()};
    const auto outs = outputs_at(model, data, data.T());
    res.log.push_back({epoch, surrogate_loss(cur, cfg.sigma_h, data, order),
                       empirical_ramp_risk(outs, cfg.gamma), zero_one_error(outs),
                       spectral_norm(cur.U)});
    return std::isfinite(res.log.back().loss);
  };

  log_epoch(0, w);
  VanillaWeights last_finite = w;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, end - start);
      const Gradients g = bptt_gradients(w, cfg.sigma_h, data, batch);
      w.U = w.U - g.U * cfg.learning_rate;
      w.V = w.V - g.V * cfg.learning_rate;
      w.W = w.W - g.W * cfg.learning_rate;
    }
    const bool finite = w.U.all_finite() && w.V.all_finite() && w.W.all_finite();
    if (finite && cfg.target_spectral_U) w.U = scale_spectral(w.U, *cfg.target_spectral_U);
    if (!finite || !log_epoch(epoch, w)) {
      res.diverged = true;
      w = last_finite;
      break;
    }
    last_finite = w;
  }
  res.model = Model{std::move(w), cfg.sigma_h, Activation::identity()};
  return res;
}

}  // namespace rnngen
