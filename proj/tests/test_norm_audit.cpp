#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "rnngen/data.hpp"
#include "rnngen/errors.hpp"
#include "rnngen/norm_audit.hpp"
#include "rnngen/verify.hpp"

using namespace rnngen;

namespace {

SequenceDataset small_data(std::size_t d_x, std::size_t m = 4, std::size_t T = 5) {
  return gen_synthetic(m, T, d_x, 2, LabelRule::running_sign, 9).data;
}

MguWeights zero_mgu(std::size_t d) {
  return {Matrix(d, d), Matrix(d, d), Matrix(d, d), Matrix(d, d), Matrix(2, d)};
}

}  // namespace

TEST_CASE("audit of identity weights") {
  const Model m{VanillaWeights{Matrix::identity(3), Matrix::identity(3), Matrix::identity(3)}};
  const NormProfile p = audit(m);
  for (const auto& n : p.matrices) {
    CHECK(n.spectral == doctest::Approx(1.0));
    CHECK(n.stable_rank() == doctest::Approx(std::sqrt(3.0)));
  }
  CHECK(p.width == doctest::Approx(std::sqrt(27.0)));
}

TEST_CASE("audit at the published operating point") {
  const MatrixNorms n = measure("U", fixtures::reference_operating_point());
  CHECK(n.spectral == doctest::Approx(2.6801).epsilon(1e-10));
  CHECK(n.frobenius == doctest::Approx(13.6823).epsilon(1e-12));
  CHECK(n.two_one == doctest::Approx(154.5439).epsilon(1e-12));
  CHECK(format_ratio(n.stable_rank(), 1) == "5.1");
  CHECK(format_ratio(n.two_one_over_frobenius(), 1) == "11.3");
  CHECK(format_ratio(n.stable_rank(), 4) == "5.1051");
  CHECK(format_ratio(n.two_one_over_frobenius(), 4) == "11.2952");
}

TEST_CASE("format_ratio rounds half up") {
  CHECK(format_ratio(5.105, 1) == "5.1");
  CHECK(format_ratio(0.25, 1) == "0.3");
  CHECK(format_ratio(11.295, 1) == "11.3");
  CHECK(format_ratio(2.0, 3) == "2.000");
}

TEST_CASE("profile invariants on random models") {
  WeightSampler ws;
  std::mt19937_64 rng(4);
  for (CellType c : {CellType::vanilla, CellType::mgu, CellType::lstm, CellType::conv}) {
    for (int i = 0; i < 20; ++i) {
      const NormProfile p = audit(ws.sample(c, rng));
      for (const auto& n : p.matrices) {
        CHECK(n.spectral <= n.frobenius * (1 + 1e-12));
        CHECK(n.frobenius <= n.two_one * (1 + 1e-12));
        CHECK(n.stable_rank() >= 1.0 - 1e-12);
      }
    }
  }
}

TEST_CASE("gate statistics") {
  const auto data = small_data(3);
  SUBCASE("MGU with zero weights") {
    const GateStats g = gate_stats(Model{zero_mgu(3)}, data);
    CHECK(g.beta == doctest::Approx(0.5));
    CHECK(g.theta == doctest::Approx(0.5));
  }
  SUBCASE("MGU with r = 0.5 and unit U_h") {
    MguWeights w = zero_mgu(3);
    w.U_h = Matrix::identity(3);
    const GateStats g = gate_stats(Model{w}, data);
    CHECK(g.beta == doctest::Approx(0.75));
    CHECK(g.theta == doctest::Approx(0.75));
  }
  SUBCASE("LSTM with zero weights") {
    LstmWeights w;
    for (Matrix* m : {&w.W_g, &w.W_r, &w.W_o, &w.W_c, &w.U_g, &w.U_r, &w.U_o, &w.U_c}) *m = Matrix(3, 3);
    w.V = Matrix(2, 3);
    const GateStats g = gate_stats(Model{w}, data);
    CHECK(g.beta == doctest::Approx(0.5));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(gate_stats(Model{zero_mgu(3)}, SequenceDataset{}), InvalidInput);
    const Model vanilla{VanillaWeights{Matrix::identity(3), Matrix(2, 3), Matrix(3, 3)}};
    CHECK_THROWS_AS(gate_stats(vanilla, data), InvalidInput);
  }
}

TEST_CASE("assumption checks") {
  const auto data = small_data(2);
  const Model m{VanillaWeights{Matrix::identity(2) * 0.5, Matrix(2, 2, 0.1), Matrix::identity(2)}};
  NormCaps caps;
  caps.spectral["U"] = 0.6;
  caps.spectral["W"] = 0.5;
  caps.frobenius["X"] = 1.0;
  const AssumptionReport r = check_assumptions(m, data, caps);
  REQUIRE(r.find("input_bound"));
  CHECK(r.find("input_bound")->passed);
  CHECK(r.find("spectral.U")->passed);
  CHECK_FALSE(r.find("spectral.W")->passed);
  CHECK_FALSE(r.find("frobenius.X")->passed);
  CHECK(r.find("sigma_h_zero")->passed);
  CHECK_FALSE(r.all_passed());

  Model sig = m;
  sig.sigma_h = Activation::sigmoid();
  CHECK_FALSE(check_assumptions(sig, data).find("sigma_h_zero")->passed);

  SequenceDataset loud = data;
  loud.inputs[0][0][0] = 3.0;
  CHECK_FALSE(check_assumptions(m, loud).find("input_bound")->passed);
}

TEST_CASE("conv orthogonality assumption") {
  std::mt19937_64 rng(8);
  WeightSampler ws;
  const Model good = ws.sample(CellType::conv, rng);
  const auto data = small_data(ws.conv_d);
  const auto r = check_assumptions(good, data);
  CHECK(r.all_passed());
  Model bad = good;
  std::get<ConvWeights>(bad.weights).U_cal(0, 0) += 1e-3;
  CHECK_FALSE(check_assumptions(bad, data).find("orthogonality.U_cal")->passed);
}
