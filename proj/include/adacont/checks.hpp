#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace adacont {

/// Outcome of one end-to-end oracle check.
struct CheckResult {
    std::string name;
    bool passed = false;
    double measured = 0.0;   // worst error (or the quantity named in `detail`)
    double tolerance = 0.0;
    double seconds = 0.0;
    std::string detail;
};

CheckResult check_laminar_fixed_point();
CheckResult check_conduction_fixed_point();
CheckResult check_jacobian_differences();
CheckResult check_preconditioner_limits();
CheckResult check_bicgstab_dense();
CheckResult check_continuation_toys();
CheckResult check_step_schedule();
/// Convecting-branch Δt sweep; writes its CSV files below `work_dir`.
CheckResult check_delta_t_regimes(const std::filesystem::path& work_dir);
CheckResult check_laminar_branch();
CheckResult check_snapshot_round_trip(const std::filesystem::path& work_dir);

/// Runs a check, timing it and turning exceptions into failures.
CheckResult timed(const std::function<CheckResult()>& check);

void print_result(std::ostream& out, const CheckResult& r);

}  // namespace adacont
