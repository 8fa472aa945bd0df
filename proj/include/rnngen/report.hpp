// SPDX-License-Identifier: Apache-2.0
//
// CSV reports. One fixed header per report kind, '\n' line endings, '.' as
// decimal point, doubles with 17 significant digits ("inf" when infinite).
#pragma once

#include <ostream>
#include <span>
#include <string>

#include "rnngen/bounds.hpp"
#include "rnngen/norm_audit.hpp"
#include "rnngen/train.hpp"
#include "rnngen/verify.hpp"

namespace rnngen {

std::string format_double(double v);

inline constexpr std::string_view kBoundsHeader =
    "bound_id,value,log_value,overflow,regime,d,t,m,gamma,order_only";
inline constexpr std::string_view kVerifyHeader = "trial_kind,trials,violations,worst_ratio,seed";
inline constexpr std::string_view kProfileHeader =
    "matrix,rows,cols,spectral,frobenius,two_one,stable_rank,two_one_over_frobenius";
inline constexpr std::string_view kAssumptionsHeader = "check,passed,measured,threshold";
inline constexpr std::string_view kTrainLogHeader = "epoch,loss,ramp_risk,zero_one,B_U";

std::string bound_row(const BoundReport& r);
std::string verify_row(const TrialReport& r);

void write_bounds_csv(std::ostream& os, std::span<const BoundReport> reports);
void write_verify_csv(std::ostream& os, std::span<const TrialReport> reports);
void write_profile_csv(std::ostream& os, const NormProfile& profile);
void write_assumptions_csv(std::ostream& os, const AssumptionReport& report);
void write_train_log_csv(std::ostream& os, std::span<const EpochLog> log);

}  // namespace rnngen
