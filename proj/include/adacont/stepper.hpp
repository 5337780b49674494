#pragma once

#include "adacont/problem.hpp"

#include <span>
#include <vector>

namespace adacont {

/// One implicit-Euler step minus the input state: c·P⁻¹F(u), block-wise.
Vec residual_action(Problem& problem, const PreconditionerSpec& spec, std::span<const double> state);

/// Linearized step about `base` applied to `dir`, minus `dir`: c·P⁻¹J(u)·dir.
Vec jacobian_action(Problem& problem, const PreconditionerSpec& spec, std::span<const double> base,
                    std::span<const double> dir);

/// L₂ norm of the residual with each block scaled by (1 + κΔt)/Δt.
double scaled_residual_norm(const BlockLayout& layout, std::span<const BlockScale> scales,
                            std::span<const double> residual);

double convergence_metric(Problem& problem, const PreconditionerSpec& spec, std::span<const double> state);

/// Unpreconditioned right-hand side F(u) = N(u) + L·u.
Vec assembled_rhs(Problem& problem, std::span<const double> state);

/// Second route to the residual: c·solve_shifted(N(u) + L·u) per block.
Vec residual_via_shifted_solve(Problem& problem, const PreconditionerSpec& spec, std::span<const double> state);

/// Binds a problem to a preconditioner and caches the resolved block scales
/// for the current parameter value. All Newton machinery goes through this.
class PreconditionedSystem {
public:
    PreconditionedSystem(Problem& problem, PreconditionerSpec spec);

    Problem& problem() { return problem_; }
    const PreconditionerSpec& spec() const { return spec_; }
    std::size_t size() const { return problem_.size(); }

    double parameter() const { return problem_.parameter(); }
    void set_parameter(double lambda);

    const std::vector<BlockScale>& scales() const { return scales_; }

    Vec residual(std::span<const double> state);
    void jacobian(std::span<const double> base, std::span<const double> dir, std::span<double> out);
    double metric(std::span<const double> residual) const;

    /// ∂(residual)/∂λ by central differences in the parameter (restores λ).
    Vec parameter_derivative(std::span<const double> state);

private:
    Problem& problem_;
    PreconditionerSpec spec_;
    std::vector<BlockScale> scales_;
    Vec work_;
};

}  // namespace adacont
