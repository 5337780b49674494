#pragma once

#include "adacont/vector_ops.hpp"

#include <functional>
#include <span>
#include <vector>

namespace adacont {

/// y = A x for a matrix-free operator.
using LinearOperator = std::function<void(std::span<const double> x, std::span<double> y)>;

struct KrylovConfig {
    double rel_tol = 1e-2;
    int max_iters = 5000;
    double breakdown_eps = 1e-30;

    void validate() const;
};

enum class KrylovStatus { Converged, MaxItersExceeded, Breakdown };

const char* to_string(KrylovStatus status);

struct KrylovResult {
    Vec x;
    int iterations = 0;
    /// True residual ‖b − A x‖ / ‖b‖ of the returned iterate.
    double relative_residual = 0.0;
    KrylovStatus status = KrylovStatus::Converged;

    bool converged() const { return status == KrylovStatus::Converged; }
};

/// Counters recorded while converging one branch point.
struct SolverStats {
    int newton_iterations = 0;
    long krylov_iterations_total = 0;  // η
    std::vector<int> per_newton;       // Krylov iterations of each Newton correction
    std::vector<double> metric_history;

    void add_krylov(int iterations) {
        per_newton.push_back(iterations);
        krylov_iterations_total += iterations;
    }
};

/// Unrestarted BiCGStab with zero initial guess and shadow residual r̂ = b.
///
/// Convergence is declared on the recomputed residual, so a Converged result
/// always satisfies ‖b − A x‖ ≤ rel_tol·‖b‖.
KrylovResult bicgstab(const LinearOperator& apply_A, std::span<const double> rhs, const KrylovConfig& config);

}  // namespace adacont
