// SPDX-License-Identifier: Apache-2.0
#include "rnngen/report.hpp"

#include <cmath>
#include <cstdio>

namespace rnngen {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string bound_row(const BoundReport& r) {
  std::string s = r.id;
  s += ',' + format_double(r.value);
  s += ',' + format_double(r.log_value);
  s += r.overflow ? ",true" : ",false";
  s += ',';
  s += to_string(r.regime);
  s += ',' + format_double(r.width);
  s += ',' + std::to_string(r.t);
  s += ',' + std::to_string(r.m);
  s += ',' + format_double(r.gamma);
  s += r.order_only ? ",true" : ",false";
  return s;
}

std::string verify_row(const TrialReport& r) {
  return r.kind + ',' + std::to_string(r.trials) + ',' + std::to_string(r.violations) + ',' +
         format_double(r.worst_ratio) + ',' + std::to_string(r.seed);
}

void write_bounds_csv(std::ostream& os, std::span<const BoundReport> reports) {
  os << kBoundsHeader << '\n';
  for (const auto& r : reports) os << bound_row(r) << '\n';
}

void write_verify_csv(std::ostream& os, std::span<const TrialReport> reports) {
  os << kVerifyHeader << '\n';
  for (const auto& r : reports) os << verify_row(r) << '\n';
}

void write_profile_csv(std::ostream& os, const NormProfile& profile) {
  os << kProfileHeader << '\n';
  for (const MatrixNorms& n : profile.matrices) {
    os << n.name << ',' << n.rows << ',' << n.cols << ',' << format_double(n.spectral) << ','
       << format_double(n.frobenius) << ',' << format_double(n.two_one) << ','
       << format_double(n.stable_rank()) << ',' << format_double(n.two_one_over_frobenius())
       << '\n';
  }
}

void write_assumptions_csv(std::ostream& os, const AssumptionReport& report) {
  os << kAssumptionsHeader << '\n';
  for (const AssumptionCheck& c : report.checks) {
    os << c.id << ',' << (c.passed ? "true" : "false") << ',' << format_double(c.measured) << ','
       << format_double(c.threshold) << '\n';
  }
}

void write_train_log_csv(std::ostream& os, std::span<const EpochLog> log) {
  os << kTrainLogHeader << '\n';
  for (const EpochLog& e : log) {
    os << e.epoch << ',' << format_double(e.loss) << ',' << format_double(e.ramp_risk) << ','
       << format_double(e.zero_one) << ',' << format_double(e.B_U) << '\n';
  }
}

}  // namespace rnngen
