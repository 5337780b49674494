#pragma once

#include <stdexcept>
#include <string>

namespace adacont {

enum class FailureKind { NonConvergence, KrylovFailure, SingularBorder, StepUnderflow };

inline const char* to_string(FailureKind kind) {
    switch (kind) {
        case FailureKind::NonConvergence: return "non_convergence";
        case FailureKind::KrylovFailure: return "krylov_failure";
        case FailureKind::SingularBorder: return "singular_border";
        case FailureKind::StepUnderflow: return "step_underflow";
    }
    return "?";
}

/// Recoverable solver failure; the step-control layer catches it and retries.
class SolverFailure : public std::runtime_error {
public:
    SolverFailure(FailureKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    FailureKind kind() const { return kind_; }

private:
    FailureKind kind_;
};

/// Poisson solve requested with a right-hand side outside the range of the operator.
class CompatibilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace adacont
