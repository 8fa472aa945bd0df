#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "rnngen/data.hpp"
#include "rnngen/errors.hpp"
#include "rnngen/margin.hpp"
#include "rnngen/norm_audit.hpp"
#include "rnngen/train.hpp"

using namespace rnngen;

TEST_CASE("synthetic data respects the input budget and is reproducible") {
  for (LabelRule rule : {LabelRule::teacher, LabelRule::running_sign}) {
    const auto a = gen_synthetic(30, 8, 3, 3, rule, 4);
    const auto b = gen_synthetic(30, 8, 3, 3, rule, 4);
    CHECK(a.data == b.data);
    CHECK(max_input_norm(a.data) <= 1.0);
    for (const auto& ls : a.data.labels)
      for (int z : ls) CHECK((z >= 1 && z <= 3));
    const Model any{VanillaWeights{Matrix::identity(2), Matrix(3, 2), Matrix(2, 3)}};
    CHECK(check_assumptions(any, a.data).find("input_bound")->passed);
  }
  CHECK_THROWS_AS(gen_synthetic(10, 5, 2, 1, LabelRule::teacher, 1), InvalidInput);
  CHECK(label_rule_from_string("running-sign") == LabelRule::running_sign);
}

TEST_CASE("teacher has zero ramp risk at half its smallest margin") {
  const auto syn = gen_synthetic(40, 6, 3, 3, LabelRule::teacher, 12);
  REQUIRE(syn.teacher);
  for (std::size_t t = 1; t <= 6; ++t) {
    const auto outs = outputs_at(*syn.teacher, syn.data, t);
    double smallest = INFINITY;
    for (const auto& o : outs) smallest = std::min(smallest, margin(o.y, o.z));
    REQUIRE(smallest > 0.0);
    CHECK(empirical_ramp_risk(outs, smallest / 2) == 0.0);
  }
}

TEST_CASE("split_half") {
  const auto d = gen_synthetic(7, 3, 2, 2, LabelRule::running_sign, 1).data;
  const auto [a, b] = split_half(d);
  CHECK(a.m() == 4);
  CHECK(b.m() == 3);
  CHECK(a.inputs[0] == d.inputs[0]);
  CHECK(b.inputs[0] == d.inputs[4]);
}

TEST_CASE("scale_spectral") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  Matrix M(4, 3);
  for (double& v : M.data()) v = n(rng);
  CHECK(spectral_norm(scale_spectral(M, 1.0)) == doctest::Approx(1.0).epsilon(1e-9));
  const Matrix same = scale_spectral(M, spectral_norm(M));
  for (std::size_t i = 0; i < M.size(); ++i) CHECK(std::abs(same.data()[i] - M.data()[i]) <= 1e-12);
  CHECK(scale_spectral(M, 0.0) == Matrix(4, 3));
  CHECK_THROWS_AS(scale_spectral(Matrix(2, 2), 1.0), InvalidInput);
}

TEST_CASE("learning rate zero leaves weights unchanged") {
  const auto d = gen_synthetic(20, 4, 2, 2, LabelRule::running_sign, 3).data;
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.epochs = 5;
  cfg.d_h = 3;
  const auto res = train_vanilla(d, cfg);
  const auto init = init_vanilla(2, 3, 2, cfg.init_scale, cfg.seed);
  CHECK(std::get<VanillaWeights>(res.model.weights) == init);
  CHECK(res.log.size() == 6);
}

TEST_CASE("training reduces zero-one error on the running-sign task") {
  const auto d = gen_synthetic(100, 5, 2, 2, LabelRule::running_sign, 21).data;
  TrainConfig cfg;
  cfg.d_h = 2;
  cfg.epochs = 200;
  cfg.learning_rate = 0.1;
  cfg.seed = 21;
  const auto res = train_vanilla(d, cfg);
  CHECK_FALSE(res.diverged);
  CHECK(res.log.back().zero_one < res.log.front().zero_one);
}

TEST_CASE("divergence returns the last finite state") {
  const auto d = gen_synthetic(20, 30, 2, 2, LabelRule::running_sign, 3).data;
  TrainConfig cfg;
  cfg.learning_rate = 1e300;
  cfg.epochs = 5;
  cfg.sigma_h = Activation::relu();
  cfg.init_scale = 3.0;
  const auto res = train_vanilla(d, cfg);
  CHECK(res.diverged);
  const auto& w = std::get<VanillaWeights>(res.model.weights);
  CHECK(w.U.all_finite());
  CHECK(w.V.all_finite());
}

TEST_CASE("target spectral norm is enforced after each epoch") {
  const auto d = gen_synthetic(40, 6, 3, 2, LabelRule::running_sign, 8).data;
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.target_spectral_U = 1.3;
  const auto res = train_vanilla(d, cfg);
  for (const auto& e : res.log) CHECK(e.B_U == doctest::Approx(1.3).epsilon(1e-9));
}

TEST_CASE("BPTT matches central differences") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto d = gen_synthetic(3, 5, 3, 3, LabelRule::teacher, seed).data;
    const VanillaWeights w = init_vanilla(3, 4, 3, 1.5, seed);
    std::vector<std::size_t> batch(d.m());
    std::iota(batch.begin(), batch.end(), 0);
    const Gradients g = bptt_gradients(w, Activation::tanh(), d, batch);
    CHECK(g.loss == doctest::Approx(surrogate_loss(w, Activation::tanh(), d, batch)));
    auto check = [&](Matrix VanillaWeights::*which, const Matrix& grad) {
      for (std::size_t i = 0; i < grad.size(); ++i) {
        VanillaWeights p = w, m = w;
        (p.*which).data()[i] += 1e-5;
        (m.*which).data()[i] -= 1e-5;
        const double fd = (surrogate_loss(p, Activation::tanh(), d, batch) -
                           surrogate_loss(m, Activation::tanh(), d, batch)) / 2e-5;
        const double an = grad.data()[i];
        CHECK(std::abs(fd - an) <= 1e-5 * std::max(1.0, std::abs(an)));
      }
    };
    check(&VanillaWeights::U, g.U);
    check(&VanillaWeights::V, g.V);
    check(&VanillaWeights::W, g.W);
  }
}
