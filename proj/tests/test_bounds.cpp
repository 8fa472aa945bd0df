#include <cmath>
#include <random>

#include "doctest.h"
#include "golden_values.hpp"
#include "rnngen/bounds.hpp"
#include "rnngen/errors.hpp"

using namespace rnngen;

namespace {

BoundQuery vanilla_query(Dims dims, double B_U, double B_V, double B_W, int t, std::size_t m,
                         double gamma) {
  BoundQuery q;
  q.profile = vanilla_profile(dims, B_U, B_V, B_W);
  q.t = t;
  q.m = m;
  q.gamma = gamma;
  return q;
}

BoundQuery small() { return vanilla_query({2, 2, 2}, 1, 1, 1, 1, 100, 1); }

void set_norms(BoundQuery& q, std::string_view name, double spectral, double frob, double two_one) {
  for (auto& n : q.profile.matrices) {
    if (n.name == name) {
      n.spectral = spectral;
      n.frobenius = frob;
      n.two_one = two_one;
    }
  }
}

NormProfile gated_profile(CellType cell, std::size_t d, double B_V, double B_W, double beta,
                          double theta) {
  NormProfile p;
  p.cell = cell;
  p.dims = {d, d, d};
  p.width = static_cast<double>(d);
  const char* w = cell == CellType::mgu ? "W_h" : "W_c";
  p.matrices = {{"V", d, d, B_V, B_V, B_V}, {w, d, d, B_W, B_W, B_W}};
  p.gates = GateStats{beta, theta};
  return p;
}

}  // namespace

TEST_CASE("regimes") {
  CHECK(regime_classify(0.9) == Regime::I);
  CHECK(regime_classify(1.0) == Regime::II);
  CHECK(regime_classify(1.0 + 1e-13) == Regime::II);
  CHECK(regime_classify(1.1) == Regime::III);
  CHECK(regime_order(Regime::II) == "d*t/(sqrt(m)*gamma)");
}

TEST_CASE("vanilla ERC bound") {
  CHECK(vanilla_erc_bound(small()).value == doctest::Approx(golden::kVanillaErcSmall).epsilon(1e-12));
  auto zero_v = small();
  set_norms(zero_v, "V", 0, 0, 0);
  CHECK(vanilla_erc_bound(zero_v).value == doctest::Approx(0.04).epsilon(1e-15));

  const auto long_q = vanilla_query({2, 2, 2}, 2, 1, 1, 50, 100, 1);
  const BoundReport r = vanilla_erc_bound(long_q);
  CHECK(std::isfinite(r.value));
  CHECK(r.regime == Regime::III);
  CHECK(r.value == doctest::Approx(golden::kVanillaErcLong).epsilon(1e-10));

  const auto q1 = vanilla_query({3, 5, 2}, 0.8, 1.5, 0.7, 40, 500, 0.5);
  CHECK(vanilla_erc_bound(q1).value == doctest::Approx(golden::kVanillaErcRegimeI).epsilon(1e-10));
  CHECK_FALSE(vanilla_erc_bound(q1).order_only);
}

TEST_CASE("vanilla ERC bound overflows into log space") {
  const BoundReport r = vanilla_erc_bound(vanilla_query({2, 2, 2}, 10, 1e306, 1, 5000, 100, 1));
  CHECK(r.overflow);
  CHECK(std::isinf(r.value));
  CHECK(std::isfinite(r.log_value));
}

TEST_CASE("vanilla ERC bound is monotone in B_U") {
  double prev = 0.0;
  for (double bu : {0.5, 0.9, 1.0, 1.1, 1.5, 2.0}) {
    const double v = vanilla_erc_bound(vanilla_query({3, 4, 2}, bu, 1, 1, 20, 100, 1)).value;
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("generalization bound") {
  auto q = small();
  q.delta = 2.0 / std::exp(2.0);
  const double erc = vanilla_erc_bound(q).value;
  CHECK(vanilla_generalization_bound(q, 0.0) == doctest::Approx(0.3 + 2 * erc).epsilon(1e-14));
  CHECK(vanilla_generalization_bound(q, 1.0) >= 1.0);
  auto q4 = q;
  q4.m = 400;
  const double slack = vanilla_generalization_bound(q, 0.0) - 2 * erc;
  const double slack4 = vanilla_generalization_bound(q4, 0.0) - 2 * vanilla_erc_bound(q4).value;
  CHECK(slack4 == doctest::Approx(slack / 2).epsilon(1e-12));
  CHECK_THROWS_AS(vanilla_generalization_bound(q, 1.5), InvalidInput);
}

TEST_CASE("refined (2,1) bound") {
  CHECK(refined_21_bound(small()).value == doctest::Approx(golden::kRefined21Small).epsilon(1e-12));
  auto zero = small();
  for (auto name : {"U", "V", "W"}) set_norms(zero, name, 1, 1, 0);
  CHECK(refined_21_bound(zero).value == doctest::Approx(0.04).epsilon(1e-15));

  auto q = vanilla_query({3, 2, 3}, 0.9, 1.2, 0.8, 4, 250, 0.5);
  set_norms(q, "U", 0.9, 1.0, 2.5);
  set_norms(q, "V", 1.2, 1.3, 1.5);
  set_norms(q, "W", 0.8, 0.9, 0.5);
  CHECK(refined_21_bound(q, true).value ==
        doctest::Approx(golden::kRefined21SquaredMixed).epsilon(1e-12));
  CHECK(refined_21_bound(q, true).id == "refined_21_squared");

  auto g2 = small();
  g2.gamma = 2.0;
  CHECK(refined_21_bound(g2).value == doctest::Approx(refined_21_bound(small()).value / 2));
}

TEST_CASE("PAC-Bayes bound") {
  const BoundReport r = pacbayes_bound(small());
  CHECK(r.order_only);
  CHECK(r.value == doctest::Approx(golden::kPacBayesSmall).epsilon(1e-12));
  auto no_f = small();
  for (auto name : {"U", "V", "W"}) set_norms(no_f, name, 1, 0, 1);
  CHECK(pacbayes_bound(no_f).value == 0.0);
  auto no_u = small();
  set_norms(no_u, "U", 0, 0, 0);
  CHECK(pacbayes_bound(no_u).value == 0.0);
  auto m1 = small();
  m1.m = 1;
  CHECK_THROWS_AS(pacbayes_bound(m1), InvalidInput);
  CHECK(pacbayes_gap(1.0, 100, 0.05) == doctest::Approx(golden::kPacBayesGap).epsilon(1e-14));
}

TEST_CASE("comparison bounds") {
  const auto c = comparison_bounds(small());
  CHECK(c[0].id == "ours");
  CHECK(c[0].value == doctest::Approx(golden::kCompareOursSmall).epsilon(1e-14));
  CHECK(c[1].value == doctest::Approx(golden::kCompareBound1Small).epsilon(1e-14));
  CHECK(c[2].value == doctest::Approx(golden::kCompareBound2Small).epsilon(1e-14));
  CHECK(c[3].value == doctest::Approx(golden::kCompareBound3Small).epsilon(1e-14));
}

TEST_CASE("comparison bounds at the published operating point") {
  BoundQuery q = small();
  q.profile.width = 128;
  set_norms(q, "U", 2.6801, 13.6823, 154.5439);
  q.t = 56;
  const auto c = comparison_bounds(q);
  CHECK(log_ratio(c[1], c[0]) == doctest::Approx(golden::kCompareLogBound1OverOursRefPoint).epsilon(1e-10));
  CHECK(log_ratio(c[1], c[0]) > std::log(1e10));
  CHECK(c[0].lambda_t == doctest::Approx(std::sqrt(128.0)));
}

TEST_CASE("comparison: Bound1 grows like t^2 while Ours stays flat when B_U < 1") {
  auto at = [](int t) { return comparison_bounds(vanilla_query({2, 4, 2}, 0.7, 1, 1, t, 100, 1)); };
  const auto a = at(100), b = at(1000);
  CHECK(log_ratio(b[1], a[1]) == doctest::Approx(2 * std::log(10.0)).epsilon(1e-12));
  CHECK(log_ratio(b[0], a[0]) < 0.05);
}

TEST_CASE("gated bounds") {
  BoundQuery q = small();
  q.t = 3;
  q.profile = gated_profile(CellType::mgu, 2, 1, 1, 0.5, 0.5);
  CHECK(mgu_bound(q).value == doctest::Approx(golden::kMguHalfGates).epsilon(1e-12));
  CHECK(mgu_bound(q).order_only);

  q.profile = gated_profile(CellType::mgu, 2, 0, 0, 0.5, 0.5);
  CHECK(mgu_bound(q).value == 0.0);

  q.profile = gated_profile(CellType::lstm, 3, 1, 1, 0.8, 0.9);  // saturation needs theta < 1 too
  q.t = 50;
  const double v50 = lstm_bound(q).value;
  q.t = 100;
  const double v100 = lstm_bound(q).value;
  CHECK(std::abs(v100 / v50 - 1) < 0.05);

  q.profile.gates.reset();
  CHECK_THROWS_AS(lstm_bound(q), InvalidInput);
}

TEST_CASE("conv bound") {
  BoundQuery q = small();
  q.profile.cell = CellType::conv;
  q.profile.width = 2;
  q.profile.k = 1;
  CHECK(conv_bound(q).value == doctest::Approx(golden::kConvSmall).epsilon(1e-12));
  const double base = conv_bound(q).value;
  q.gamma = 2;
  CHECK(conv_bound(q).value == doctest::Approx(base / 2));
  q.gamma = 1;
  q.profile.k = 2;
  CHECK(conv_bound(q).value == doctest::Approx(base * 2));
}

TEST_CASE("covering numbers") {
  CHECK(covering_log(small(), 0.5) == doctest::Approx(golden::kCoveringSmall).epsilon(1e-12));
  CHECK(covering_log(small(), 1e-3, true) <= covering_log(small(), 1e-3) + 3 * 12 * std::log(2.0));
  auto trivial = small();
  set_norms(trivial, "V", 0, 0, 0);
  CHECK(covering_log(trivial, 0.1) == 0.0);
  CHECK_THROWS_AS(covering_log(small(), 0.0), InvalidInput);
  CHECK(matrix_covering_log(2, 2, 1, 1) == doctest::Approx(golden::kMatrixCovering2x2).epsilon(1e-14));
}

TEST_CASE("Dudley integral against a closed-form minimiser") {
  const auto fn = [](double e) { return 4 * std::log1p(1 / e); };
  const DudleyResult d = dudley_erc(fn, 1.0, 100);
  CHECK(d.value == doctest::Approx(golden::kDudleyRefValue).epsilon(2e-3));
  CHECK(d.value >= golden::kDudleyRefValue * (1 - 1e-4));
  const DudleyResult fine = dudley_erc(fn, 1.0, 100, 800, 8192);
  CHECK(fine.value == doctest::Approx(golden::kDudleyRefValue).epsilon(2e-4));
  CHECK(fine.best_alpha == doctest::Approx(golden::kDudleyRefAlpha).epsilon(0.05));
  CHECK_THROWS_AS(dudley_erc(fn, 1.0, 100, 96, 100), InvalidInput);
}

TEST_CASE("Dudley with a trivial class sits at the smallest alpha") {
  const DudleyResult d = dudley_erc([](double) { return 0.0; }, 1.0, 100);
  CHECK(d.best_alpha == doctest::Approx(1e-6 / 10).epsilon(1e-9));
  CHECK(d.value == doctest::Approx(4 * 1e-7 / 10).epsilon(1e-9));
}

TEST_CASE("Dudley infimum never exceeds the closed form at alpha = 1/sqrt(m)") {
  for (double bu : {0.5, 1.0, 1.3})
    for (double bw : {0.2, 1.0, 4.0})
      for (std::size_t m : {10u, 1000u}) {
        const auto q = vanilla_query({3, 4, 2}, bu, 1, bw, 8, m, 1);
        CHECK(vanilla_dudley_erc(q).value <= vanilla_erc_bound(q).value);
      }
}

TEST_CASE("query validation") {
  auto q = small();
  q.gamma = 0;
  CHECK_THROWS_AS(vanilla_erc_bound(q), InvalidInput);
  q = small();
  q.t = 0;
  CHECK_THROWS_AS(vanilla_erc_bound(q), InvalidInput);
  q = small();
  q.profile.matrices.pop_back();
  CHECK_THROWS_AS(vanilla_erc_bound(q), InvalidInput);
}
