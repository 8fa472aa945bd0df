// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "rnngen/bounds.hpp"
#include "rnngen/data.hpp"
#include "rnngen/margin.hpp"
#include "rnngen/norm_audit.hpp"
#include "rnngen/report.hpp"
#include "rnngen/train.hpp"
#include "rnngen/verify.hpp"

using namespace rnngen;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  double budget_s;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1. audit arithmetic at the published operating point
Outcome audit_arithmetic() {
  const MatrixNorms n = measure("U", fixtures::reference_operating_point());
  const double sr = n.stable_rank(), ratio = n.two_one_over_frobenius();
  const bool exact = std::abs(sr - 13.6823 / 2.6801) < 5e-5 && std::abs(ratio - 154.5439 / 13.6823) < 5e-5;
  const bool shown = format_ratio(sr, 1) == "5.1" && format_ratio(ratio, 1) == "11.3" &&
                     format_ratio(sr, 3) == "5.105" && format_ratio(ratio, 3) == "11.295";
  return {exact && shown, fmt("stable rank %s (%s), M/F %s (%s)", format_ratio(sr, 4).c_str(),
                              format_ratio(sr, 1).c_str(), format_ratio(ratio, 4).c_str(),
                              format_ratio(ratio, 1).c_str())};
}

// 2. comparison ordering on a trained vanilla model
Outcome comparison_ordering() {
  constexpr int T = 20;
  const auto data = gen_synthetic(200, T, 4, 2, LabelRule::running_sign, 3).data;
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.d_h = 8;
  cfg.seed = 3;
  cfg.target_spectral_U = 1.5;
  const TrainResult res = train_vanilla(data, cfg);
  const NormProfile p = audit(res.model, data);
  const auto cmp = comparison_bounds(make_query(res.model, p, T, data.m(), 0.5));

  // go through the CSV the CLI emits and read the values back
  std::ostringstream csv;
  write_bounds_csv(csv, cmp);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  std::vector<double> logv;
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    logv.push_back(std::stod(cols.at(2)));
  }
  const double ours = logv.at(0), b1 = logv.at(1), b2 = logv.at(2), b3 = logv.at(3);
  const double B_U = p.at("U").spectral;
  const bool ok = !res.diverged && B_U > 1 && ours < b3 && b3 <= b2 && ours - b1 < std::log(1e-3);
  return {ok, fmt("B_U %.4f, t %d: log Ours %.3f < log B3 %.3f <= log B2 %.3f; Ours/B1 %.3g", B_U,
                  T, ours, b3, b2, std::exp(ours - b1))};
}

double ours_slope(double B_U, double B_W) {
  std::vector<double> x, y;
  for (int t = 16; t <= 1024; t *= 2) {
    BoundQuery q;
    q.profile = vanilla_profile({4, 8, 2}, B_U, 1.0, B_W);
    q.t = t;
    q.m = 1000;
    q.gamma = 1.0;
    x.push_back(std::log(t));
    y.push_back(comparison_bounds(q)[0].log_value);
  }
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

// 3. log-log slopes in t per regime
Outcome regime_slopes() {
  const double s1 = ours_slope(0.5, 1.0);
  const double s2 = ours_slope(1.0, 1e-3);  // B_W·t stays below √d
  const double s3 = ours_slope(1.5, 1.0);
  const bool ok = s1 <= 0.2 && s2 >= 0.85 && s2 <= 1.2 && s3 >= 0.4 && s3 <= 0.65;
  return {ok, fmt("slopes I %.3f, II %.3f, III %.3f", s1, s2, s3)};
}

// 4. hidden-norm, output Lipschitz and conv orthogonality suites
Outcome lipschitz_suites() {
  WeightSampler ws;
  DataSampler ds;
  std::size_t violations = 0, trials = 0;
  double worst = 0;
  for (CellType c : {CellType::vanilla, CellType::mgu, CellType::lstm, CellType::conv}) {
    for (const TrialReport& r : {verify_hidden_norm(c, ws, ds, 1000, 7),
                                 verify_output_lipschitz(c, ws, ds, 0.1, 1000, 7)}) {
      violations += r.violations;
      trials += r.trials;
      worst = std::max(worst, r.worst_ratio);
    }
  }
  const TrialReport orth = verify_conv_orthogonality(2, 6, 100, 7);
  violations += orth.violations;
  trials += orth.trials;
  return {violations == 0,
          fmt("%zu trials, %zu violations, worst ratio %.4f", trials, violations, worst)};
}

// 5. margin Lipschitz: factor 2 holds, unit constant fails on the fixed pair
Outcome margin_dual() {
  const MarginLipschitzReport r = verify_margin_lipschitz(10000, 3, 7);
  const Vector y{1, -1}, yp{-1, 1};
  const double dm = std::abs(margin(y, 1) - margin(yp, 1));
  const double dy = std::sqrt(8.0);
  const bool pair_violates = dm > dy && dm <= 2 * dy;
  return {r.factor_two.clean() && r.factor_two.trials == 10000 && pair_violates,
          fmt("factor-2: %zu/%zu violations; pair |dM| = %.0f vs ||dy|| = %.4f (unit-constant form "
              "violated in %zu trials, documented)",
              r.factor_two.violations, r.factor_two.trials, dm, dy, r.unit_constant.violations)};
}

// 6. ERC sandwich and exact enumeration
Outcome erc_sandwich() {
  VanillaClassSampler cls;
  cls.dims = {2, 2, 2};
  const auto data = gen_synthetic(20, 3, 2, 2, LabelRule::running_sign, 5).data;
  ErcConfig cfg;
  cfg.draws = 200;
  cfg.candidates = 500;
  cfg.seed = 5;
  const ErcEstimate e = estimate_erc_mc(cls, data, 3, 1.0, cfg);
  BoundQuery q;
  q.profile = vanilla_profile({2, 2, 2}, 1, 1, 1);
  q.t = 3;
  q.m = 20;
  q.gamma = 1.0;
  const double bound = vanilla_erc_bound(q).value;
  const double exact =
      erc_from_responses({Vector(4, 1.0), Vector(4, -1.0)}, 0, true, 0).estimate;
  return {e.estimate <= bound && exact == 0.375,
          fmt("MC estimate %.4f (se %.4f) <= bound %.4f; two-constant class %.17g", e.estimate,
              e.std_error, bound, exact)};
}

// 7. BPTT against central differences
Outcome gradient_check() {
  constexpr double kFloor = 1e-6;
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::size_t d_h = 1 + seed % 4, T = 1 + seed % 5;
    const auto data = gen_synthetic(4, T, 3, 3, LabelRule::teacher, seed).data;
    const VanillaWeights w = init_vanilla(3, d_h, 3, 1.5, seed + 100);
    std::vector<std::size_t> batch(data.m());
    std::iota(batch.begin(), batch.end(), 0);
    const Gradients g = bptt_gradients(w, Activation::tanh(), data, batch);
    for (auto [which, grad] : {std::pair{&VanillaWeights::U, &g.U}, std::pair{&VanillaWeights::V, &g.V},
                               std::pair{&VanillaWeights::W, &g.W}}) {
      for (std::size_t i = 0; i < grad->size(); ++i) {
        VanillaWeights p = w, m = w;
        (p.*which).data()[i] += 1e-5;
        (m.*which).data()[i] -= 1e-5;
        const double fd = (surrogate_loss(p, Activation::tanh(), data, batch) -
                           surrogate_loss(m, Activation::tanh(), data, batch)) / 2e-5;
        const double an = grad->data()[i];
        worst = std::max(worst, std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), kFloor}));
      }
    }
  }
  return {worst <= 1e-5, fmt("worst relative error %.3g over 10 seeds", worst)};
}

// 8. Dudley infimum vs closed form; geometric ratio continuity at 1
Outcome closed_form() {
  int grid = 0, bad = 0;
  double worst = 0;
  for (double B_U : {0.5, 0.9, 1.0, 1.1, 1.6})
    for (double B_W : {0.1, 1.0, 3.0, 10.0})
      for (std::size_t m : {10u, 100u, 1000u, 10000u, 100000u}) {
        BoundQuery q;
        q.profile = vanilla_profile({3, 5, 2}, B_U, 1.0, B_W);
        q.t = 10;
        q.m = m;
        q.gamma = 1.0;
        const double r = vanilla_dudley_erc(q).value / vanilla_erc_bound(q).value;
        worst = std::max(worst, r);
        bad += r > 1.0;
        ++grid;
      }
  double cont = 0;
  for (int t = 1; t <= 1000; ++t)
    for (double eps : {0.0, 1e-15, 5e-13, 2e-12, 1e-12})
      for (double s : {1.0, -1.0})
        cont = std::max(cont, std::abs(geometric_ratio(1.0 + s * eps, t).value - t) / t);
  return {grid == 100 && bad == 0 && cont <= 1e-9,
          fmt("%d grid points, %d above closed form (worst ratio %.4f); continuity gap %.2g", grid,
              bad, worst, cont)};
}

}  // namespace

int main() {
  bool pass2 = false, pass3 = false;
  const std::vector<Criterion> criteria{
      {1, 1, audit_arithmetic},  {2, 30, comparison_ordering}, {3, 5, regime_slopes},
      {4, 60, lipschitz_suites}, {5, 2, margin_dual},          {6, 60, erc_sandwich},
      {7, 10, gradient_check},   {8, 10, closed_form},
  };
  bool all = true;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool ok = o.pass && secs < c.budget_s;
    if (c.id == 2) pass2 = ok;
    if (c.id == 3) pass3 = ok;
    all = all && ok;
    std::printf("criterion %d: %s  %s [%.2fs / %.0fs]\n", c.id, ok ? "PASS" : "FAIL",
                o.detail.c_str(), secs, c.budget_s);
    std::fflush(stdout);
  }
  // 9 is a scope statement: the headline corpus-scale numbers are not
  // attempted; it holds when the desk-scale substitutes (2, 3) hold.
  const bool ok9 = pass2 && pass3;
  all = all && ok9;
  std::printf("criterion 9: %s  corpus-scale results not attempted; substitutes 2 and 3 %s\n",
              ok9 ? "PASS" : "FAIL", ok9 ? "hold" : "do not hold");
  return all ? 0 : 1;
}
