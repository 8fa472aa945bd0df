// SPDX-License-Identifier: Apache-2.0
//
// rnngen: audits, bounds, verification and desk-scale experiments from the
// command line.
//
// Exit codes: 0 ok, 1 usage or input error, 2 assumption failure under
// --strict, 3 verification violations.
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rnngen/bounds.hpp"
#include "rnngen/data.hpp"
#include "rnngen/errors.hpp"
#include "rnngen/margin.hpp"
#include "rnngen/model_io.hpp"
#include "rnngen/norm_audit.hpp"
#include "rnngen/report.hpp"
#include "rnngen/train.hpp"
#include "rnngen/verify.hpp"

namespace {

using namespace rnngen;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitStrict = 2;
constexpr int kExitViolations = 3;

// Writes to --out when given, stdout otherwise.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw InvalidInput("cannot open '" + path + "' for writing");
    }
  }
  std::ostream& out() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

struct Common {
  std::string model_path, data_path, out_path;
  std::optional<double> gamma;
  double delta = 0.05;
  int t = 0;
  std::size_t m = 0;
  std::uint64_t seed = 0;
  bool strict = false;
  std::string cell;
  std::vector<std::string> caps;
};

struct Loaded {
  Model model;
  std::optional<SequenceDataset> data;
};

Loaded load(const Common& c) {
  Loaded l{load_model(c.model_path), std::nullopt};
  if (!c.data_path.empty()) l.data = load_dataset(c.data_path);
  if (!c.cell.empty() && cell_type_from_string(c.cell) != l.model.cell()) {
    throw InvalidInput("--cell " + c.cell + " does not match the model's cell type '" +
                       std::string(to_string(l.model.cell())) + "'");
  }
  return l;
}

NormCaps parse_caps(const std::vector<std::string>& specs) {
  // kind:NAME=VALUE, e.g. spectral:U=1.5
  NormCaps caps;
  for (const std::string& s : specs) {
    const auto colon = s.find(':'), eq = s.find('=');
    if (colon == std::string::npos || eq == std::string::npos || eq < colon) {
      throw InvalidInput("bad --cap '" + s + "', expected kind:NAME=VALUE");
    }
    const std::string kind = s.substr(0, colon), name = s.substr(colon + 1, eq - colon - 1);
    const double v = std::stod(s.substr(eq + 1));
    if (kind == "spectral") caps.spectral[name] = v;
    else if (kind == "two_one") caps.two_one[name] = v;
    else if (kind == "frobenius") caps.frobenius[name] = v;
    else throw InvalidInput("bad --cap kind '" + kind + "'");
  }
  return caps;
}

// Assumption report to stderr; 2 under --strict when something fails.
int strict_gate(const Common& c, const Loaded& l) {
  if (!c.strict) return kExitOk;
  if (!l.data) throw InvalidInput("--strict needs --data to check the input budget");
  const AssumptionReport r = check_assumptions(l.model, *l.data, parse_caps(c.caps));
  if (r.all_passed()) return kExitOk;
  write_assumptions_csv(std::cerr, r);
  std::cerr << "assumption check failed\n";
  return kExitStrict;
}

BoundQuery query_for(const Common& c, const Loaded& l) {
  NormProfile p = l.data ? audit(l.model, *l.data) : audit(l.model);
  const std::size_t m = c.m ? c.m : (l.data ? l.data->m() : 0);
  if (m == 0) throw InvalidInput("sample size unknown: pass --m or --data");
  const int t = c.t ? c.t : (l.data ? static_cast<int>(l.data->T()) : 0);
  if (t == 0) throw InvalidInput("sequence step unknown: pass --t or --data");
  if ((p.cell == CellType::mgu || p.cell == CellType::lstm) && !p.gates) {
    throw InvalidInput("gated cells need --data for the gate statistics");
  }
  BoundQuery q = make_query(l.model, std::move(p), t, m, *c.gamma, c.delta);
  return q;
}

int cmd_audit(const Common& c) {
  const Loaded l = load(c);
  Sink sink(c.out_path);
  const NormProfile p = l.data ? audit(l.model, *l.data) : audit(l.model);
  write_profile_csv(sink.out(), p);
  if (l.data) {
    const AssumptionReport r = check_assumptions(l.model, *l.data, parse_caps(c.caps));
    std::cerr << "d = " << format_double(p.width) << "\n";
    write_assumptions_csv(std::cerr, r);
    if (c.strict && !r.all_passed()) return kExitStrict;
  } else if (c.strict) {
    throw InvalidInput("--strict needs --data to check the input budget");
  }
  return kExitOk;
}

int cmd_bound(const Common& c) {
  const Loaded l = load(c);
  if (int rc = strict_gate(c, l)) return rc;
  const BoundQuery q = query_for(c, l);
  std::vector<BoundReport> rows;
  switch (l.model.cell()) {
    case CellType::vanilla:
      rows = {vanilla_erc_bound(q), refined_21_bound(q), refined_21_bound(q, true),
              pacbayes_bound(q)};
      break;
    case CellType::mgu: rows = {mgu_bound(q)}; break;
    case CellType::lstm: rows = {lstm_bound(q)}; break;
    case CellType::conv: rows = {conv_bound(q)}; break;
  }
  Sink sink(c.out_path);
  write_bounds_csv(sink.out(), rows);
  if (l.model.cell() == CellType::vanilla && l.data) {
    const auto outs = outputs_at(l.model, *l.data, static_cast<std::size_t>(q.t));
    const double risk = empirical_ramp_risk(outs, q.gamma);
    std::cerr << "empirical ramp risk " << format_double(risk) << ", generalization bound "
              << format_double(vanilla_generalization_bound(q, risk)) << "\n";
  }
  return kExitOk;
}

int cmd_compare(const Common& c) {
  const Loaded l = load(c);
  if (l.model.cell() != CellType::vanilla) throw InvalidInput("compare needs a vanilla model");
  if (int rc = strict_gate(c, l)) return rc;
  const auto rows = comparison_bounds(query_for(c, l));
  Sink sink(c.out_path);
  write_bounds_csv(sink.out(), rows);
  return kExitOk;
}

struct VerifyOptions {
  std::string suite = "all";
  std::size_t trials = 1000;
  double scale = 0.1;
};

int cmd_verify(const Common& c, const VerifyOptions& v) {
  const std::vector<std::string> known{"all", "hidden_norm", "output_lipschitz", "margin",
                                       "conv_orthogonality", "model"};
  if (std::find(known.begin(), known.end(), v.suite) == known.end()) {
    throw CLI::ValidationError("--suite", "unknown suite '" + v.suite + "'");
  }
  auto want = [&](const char* s) { return v.suite == "all" || v.suite == s; };
  std::vector<TrialReport> counted, informational;
  const WeightSampler ws;
  const DataSampler ds;
  const CellType cells[] = {CellType::vanilla, CellType::mgu, CellType::lstm, CellType::conv};
  if (want("hidden_norm"))
    for (CellType cell : cells) counted.push_back(verify_hidden_norm(cell, ws, ds, v.trials, c.seed));
  if (want("output_lipschitz"))
    for (CellType cell : cells)
      counted.push_back(verify_output_lipschitz(cell, ws, ds, v.scale, v.trials, c.seed));
  if (want("margin")) {
    MarginLipschitzReport r = verify_margin_lipschitz(std::max<std::size_t>(v.trials, 1), 3, c.seed);
    counted.push_back(r.factor_two);
    informational.push_back(r.unit_constant);
  }
  if (want("conv_orthogonality")) counted.push_back(verify_conv_orthogonality(2, 6, 100, c.seed));
  if (want("model") && !c.model_path.empty()) {
    const Loaded l = load(c);
    if (!l.data) throw InvalidInput("the model suite needs --data");
    counted.push_back(verify_output_lipschitz(l.model, *l.data, v.scale, v.trials, c.seed));
  } else if (v.suite == "model") {
    throw InvalidInput("the model suite needs --model and --data");
  }

  Sink sink(c.out_path);
  std::vector<TrialReport> all = counted;
  all.insert(all.end(), informational.begin(), informational.end());
  write_verify_csv(sink.out(), all);
  for (const auto& r : informational) {
    std::cerr << r.kind << ": " << r.violations << " violations (known false form, not counted)\n";
  }
  const bool clean = std::all_of(counted.begin(), counted.end(), [](const auto& r) { return r.clean(); });
  return clean ? kExitOk : kExitViolations;
}

struct ErcOptions {
  std::size_t draws = 200, candidates = 500, d_h = 2;
  double cap_U = 1, cap_V = 1, cap_W = 1;
  bool refine = false, enumerate = false;
};

int cmd_erc(const Common& c, const ErcOptions& o) {
  const SequenceDataset data = load_dataset(c.data_path);
  const int t = c.t ? c.t : static_cast<int>(data.T());
  const double gamma = c.gamma.value_or(1.0);
  VanillaClassSampler cls;
  cls.dims = {data.d_x, o.d_h, static_cast<std::size_t>(data.K)};
  cls.cap_U = o.cap_U;
  cls.cap_V = o.cap_V;
  cls.cap_W = o.cap_W;
  ErcConfig cfg;
  cfg.draws = o.draws;
  cfg.candidates = o.candidates;
  cfg.seed = c.seed;
  cfg.refine = o.refine;
  cfg.enumerate_signs = o.enumerate;
  const ErcEstimate e = estimate_erc_mc(cls, data, static_cast<std::size_t>(t), gamma, cfg);
  BoundQuery q;
  q.profile = vanilla_profile(cls.dims, o.cap_U, o.cap_V, o.cap_W, data.B_x);
  q.t = t;
  q.m = data.m();
  q.gamma = gamma;
  const BoundReport b = vanilla_erc_bound(q);
  Sink sink(c.out_path);
  sink.out() << "estimate,std_error,draws,candidates,seed,bound\n"
             << format_double(e.estimate) << ',' << format_double(e.std_error) << ','
             << e.rademacher_draws << ',' << e.candidates_per_draw << ',' << e.seed << ','
             << format_double(b.value) << '\n';
  return kExitOk;
}

struct GenOptions {
  std::size_t m = 200, T = 20, d_x = 4;
  int K = 2;
  std::string rule = "running-sign";
  double B_x = 1.0;
};

int cmd_gen_data(const Common& c, const GenOptions& g) {
  const SyntheticData syn = gen_synthetic(g.m, g.T, g.d_x, g.K, label_rule_from_string(g.rule),
                                          c.seed, g.B_x);
  if (c.out_path.empty()) {
    std::cout << dataset_to_json(syn.data);
  } else {
    save_dataset(syn.data, c.out_path);
  }
  return kExitOk;
}

struct TrainOptions {
  double lr = 0.05;
  int epochs = 100;
  std::size_t batch = 16, d_h = 8;
  std::optional<double> target_B_U;
  std::string log_path;
};

TrainConfig train_config(const Common& c, const TrainOptions& o) {
  TrainConfig cfg;
  cfg.learning_rate = o.lr;
  cfg.epochs = o.epochs;
  cfg.batch_size = o.batch;
  cfg.d_h = o.d_h;
  cfg.target_spectral_U = o.target_B_U;
  cfg.seed = c.seed;
  if (c.gamma) cfg.gamma = *c.gamma;
  return cfg;
}

int cmd_train(const Common& c, const TrainOptions& o) {
  const SequenceDataset data = load_dataset(c.data_path);
  const TrainResult res = train_vanilla(data, train_config(c, o));
  if (c.out_path.empty()) {
    std::cout << model_to_json(res.model);
  } else {
    save_model(res.model, c.out_path);
  }
  if (!o.log_path.empty()) {
    Sink log(o.log_path);
    write_train_log_csv(log.out(), res.log);
  } else {
    write_train_log_csv(std::cerr, res.log);
  }
  if (res.diverged) {
    std::cerr << "training diverged; saved the last finite state\n";
    return kExitUsage;
  }
  return kExitOk;
}

struct SweepOptions {
  std::vector<double> b_u{0.9, 1.0, 1.1};
  int seeds = 5;
  TrainOptions train;
};

int cmd_regime_sweep(const Common& c, const SweepOptions& o) {
  const SequenceDataset data = load_dataset(c.data_path);
  const auto [train_half, held_out] = split_half(data);
  const double gamma = c.gamma.value_or(0.5);
  const int t = c.t ? c.t : static_cast<int>(data.T());
  Sink sink(c.out_path);
  sink.out() << "B_U,regime,order,median_gap,train_risk,heldout_risk,erc_bound,log_erc_bound,"
                "generalization_bound\n";
  for (double bu : o.b_u) {
    std::vector<double> gaps, train_risks, held_risks, bounds;
    BoundReport erc;
    for (int s = 0; s < o.seeds; ++s) {
      Common cs = c;
      cs.seed = c.seed + static_cast<std::uint64_t>(s);
      TrainOptions to = o.train;
      to.target_B_U = bu;
      TrainConfig cfg = train_config(cs, to);
      cfg.gamma = gamma;
      const TrainResult res = train_vanilla(train_half, cfg);
      const double tr = empirical_ramp_risk(outputs_at(res.model, train_half, t), gamma);
      const double ho = empirical_ramp_risk(outputs_at(res.model, held_out, t), gamma);
      gaps.push_back(std::abs(tr - ho));
      train_risks.push_back(tr);
      held_risks.push_back(ho);
      const BoundQuery q = make_query(res.model, audit(res.model, train_half), t, train_half.m(), gamma, c.delta);
      erc = vanilla_erc_bound(q);
      bounds.push_back(vanilla_generalization_bound(q, tr));
    }
    auto median = [](std::vector<double> v) {
      std::sort(v.begin(), v.end());
      const std::size_t n = v.size();
      return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    sink.out() << format_double(bu) << ',' << to_string(erc.regime) << ','
               << regime_order(erc.regime) << ',' << format_double(median(gaps)) << ','
               << format_double(median(train_risks)) << ',' << format_double(median(held_risks))
               << ',' << format_double(erc.value) << ',' << format_double(erc.log_value) << ','
               << format_double(median(bounds)) << '\n';
  }
  return kExitOk;
}

void add_common(CLI::App* sub, Common& c, bool model, bool data) {
  if (model) sub->add_option("--model", c.model_path, "Model file (JSON)")->check(CLI::ExistingFile);
  if (data) sub->add_option("--data", c.data_path, "Dataset file (JSON)")->check(CLI::ExistingFile);
  sub->add_option("--out", c.out_path, "Write the report here instead of stdout");
  sub->add_option("--seed", c.seed, "Base seed");
}

void add_bound_flags(CLI::App* sub, Common& c) {
  sub->add_option("--gamma", c.gamma, "Margin gamma > 0")->required()->check(CLI::PositiveNumber);
  sub->add_option("--delta", c.delta, "Confidence delta")->check(CLI::Range(0.0, 1.0));
  sub->add_option("--t", c.t, "Sequence step (default: dataset length)")->check(CLI::PositiveNumber);
  sub->add_option("--m", c.m, "Sample size (default: dataset size)")->check(CLI::PositiveNumber);
  sub->add_flag("--strict", c.strict, "Exit 2 when an assumption check fails");
  sub->add_option("--cap", c.caps, "Declared norm cap kind:NAME=VALUE (repeatable)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Norm audits, generalization bounds and verification for recurrent networks"};
  app.require_subcommand(1);
  Common c;

  auto* audit_cmd = app.add_subcommand("audit", "Norm profile and assumption checks");
  add_common(audit_cmd, c, true, true);
  audit_cmd->get_option("--model")->required();
  audit_cmd->add_flag("--strict", c.strict, "Exit 2 when an assumption check fails");
  audit_cmd->add_option("--cap", c.caps, "Declared norm cap kind:NAME=VALUE (repeatable)");

  auto* bound_cmd = app.add_subcommand("bound", "Complexity bounds for a model");
  add_common(bound_cmd, c, true, true);
  bound_cmd->get_option("--model")->required();
  bound_cmd->add_option("--cell", c.cell, "Expected cell type")
      ->check(CLI::IsMember({"vanilla", "mgu", "lstm", "conv"}));
  add_bound_flags(bound_cmd, c);

  auto* compare_cmd = app.add_subcommand("compare", "Vanilla bound next to three earlier-style bounds");
  add_common(compare_cmd, c, true, true);
  compare_cmd->get_option("--model")->required();
  add_bound_flags(compare_cmd, c);

  VerifyOptions vo;
  auto* verify_cmd = app.add_subcommand("verify", "Randomised checks of the inequalities");
  add_common(verify_cmd, c, true, true);
  verify_cmd->add_option("--suite", vo.suite,
                         "all | hidden_norm | output_lipschitz | margin | conv_orthogonality | model");
  verify_cmd->add_option("--trials", vo.trials, "Trials per suite")->check(CLI::PositiveNumber);
  verify_cmd->add_option("--scale", vo.scale, "Perturbation scale")->check(CLI::PositiveNumber);

  ErcOptions eo;
  auto* erc_cmd = app.add_subcommand("erc", "Monte Carlo ERC estimate for a capped vanilla class");
  add_common(erc_cmd, c, false, true);
  erc_cmd->get_option("--data")->required();
  erc_cmd->add_option("--gamma", c.gamma, "Margin gamma > 0")->check(CLI::PositiveNumber);
  erc_cmd->add_option("--t", c.t, "Sequence step")->check(CLI::PositiveNumber);
  erc_cmd->add_option("--draws", eo.draws, "Rademacher draws");
  erc_cmd->add_option("--candidates", eo.candidates, "Candidates per draw");
  erc_cmd->add_option("--d-h", eo.d_h, "Hidden width of the class");
  erc_cmd->add_option("--cap-U", eo.cap_U, "Spectral cap on U");
  erc_cmd->add_option("--cap-V", eo.cap_V, "Spectral cap on V");
  erc_cmd->add_option("--cap-W", eo.cap_W, "Spectral cap on W");
  erc_cmd->add_flag("--refine", eo.refine, "Hill-climb the best candidate of each draw");
  erc_cmd->add_flag("--enumerate", eo.enumerate, "Use all 2^m sign patterns (m <= 24)");

  GenOptions go;
  auto* gen_cmd = app.add_subcommand("gen-data", "Synthetic labeled sequences");
  add_common(gen_cmd, c, false, false);
  gen_cmd->add_option("--m", go.m, "Sequences")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--T", go.T, "Length")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--d-x", go.d_x, "Input dimension")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--K", go.K, "Classes");
  gen_cmd->add_option("--rule", go.rule, "teacher | running-sign")
      ->check(CLI::IsMember({"teacher", "running-sign", "running_sign"}));
  gen_cmd->add_option("--B-x", go.B_x, "Input norm budget")->check(CLI::PositiveNumber);

  TrainOptions to;
  auto add_train_flags = [&](CLI::App* sub, TrainOptions& t) {
    sub->add_option("--lr", t.lr, "Learning rate")->check(CLI::NonNegativeNumber);
    sub->add_option("--epochs", t.epochs, "Epochs")->check(CLI::NonNegativeNumber);
    sub->add_option("--batch", t.batch, "Batch size")->check(CLI::PositiveNumber);
    sub->add_option("--d-h", t.d_h, "Hidden width")->check(CLI::PositiveNumber);
  };
  auto* train_cmd = app.add_subcommand("train", "BPTT training of a vanilla RNN");
  add_common(train_cmd, c, false, true);
  train_cmd->get_option("--data")->required();
  add_train_flags(train_cmd, to);
  train_cmd->add_option("--gamma", c.gamma, "Ramp gamma for the log")->check(CLI::PositiveNumber);
  train_cmd->add_option("--target-B-U", to.target_B_U, "Rescale U to this spectral norm each epoch");
  train_cmd->add_option("--log", to.log_path, "Training log CSV");

  SweepOptions so;
  auto* sweep_cmd = app.add_subcommand("regime-sweep", "Empirical gap vs bound across ||U||_2");
  add_common(sweep_cmd, c, false, true);
  sweep_cmd->get_option("--data")->required();
  add_train_flags(sweep_cmd, so.train);
  sweep_cmd->add_option("--gamma", c.gamma, "Margin gamma")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--delta", c.delta, "Confidence delta")->check(CLI::Range(0.0, 1.0));
  sweep_cmd->add_option("--t", c.t, "Sequence step")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--B-U", so.b_u, "Spectral norms for U")->delimiter(',');
  sweep_cmd->add_option("--seeds", so.seeds, "Seeds per point (median taken)")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    std::cerr << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }

  try {
    if (*audit_cmd) return cmd_audit(c);
    if (*bound_cmd) return cmd_bound(c);
    if (*compare_cmd) return cmd_compare(c);
    if (*verify_cmd) return cmd_verify(c, vo);
    if (*erc_cmd) return cmd_erc(c, eo);
    if (*gen_cmd) return cmd_gen_data(c, go);
    if (*train_cmd) return cmd_train(c, to);
    if (*sweep_cmd) return cmd_regime_sweep(c, so);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what();
    if (!e.field().empty()) std::cerr << " [field " << e.field() << "]";
    std::cerr << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
