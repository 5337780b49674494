#pragma once

#include "adacont/layout.hpp"
#include "adacont/vector_ops.hpp"

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace adacont {

/// User-facing preconditioner knob for one block: the pseudo time-step Δt.
///
/// When `follows_parameter` is set the block's Δt tracks the continuation
/// parameter (the shear model's mean block uses Δt₁ = Re).
struct PreconditionerBlock {
    std::string name;
    double delta_t = 1.0;
    bool follows_parameter = false;
};

/// Per-block Δt settings for the operator c·(I − c·L)⁻¹ applied block-wise.
class PreconditionerSpec {
public:
    PreconditionerSpec() = default;
    explicit PreconditionerSpec(std::vector<PreconditionerBlock> blocks) : blocks_(std::move(blocks)) {}

    /// Same Δt on every block of the layout.
    static PreconditionerSpec uniform(const BlockLayout& layout, double delta_t);

    const std::vector<PreconditionerBlock>& blocks() const { return blocks_; }
    PreconditionerBlock& at(std::string_view name);
    const PreconditionerBlock& at(std::string_view name) const;
    void set_delta_t(std::string_view name, double delta_t);

    /// Throws unless every layout block appears exactly once with Δt > 0.
    void validate(const BlockLayout& layout) const;

private:
    std::vector<PreconditionerBlock> blocks_;
};

/// Resolved constants of one block at the current parameter value.
///
/// The shifted operator is (I − c·L_b) with L_b the block's linear term as it
/// appears in F = N + L·u, and the step difference is c·(I − c·L_b)⁻¹F_b.
/// `kappa` enters only the convergence metric scale (1 + κΔt)/Δt.
struct BlockScale {
    double delta_t = 1.0;
    double c = 1.0;
    double kappa = 1.0;
};

enum class LimitMode { Identity, Mixed, Stokes };

/// Table-style classification of a Δt value (reporting only).
LimitMode limit_mode(double delta_t);
LimitMode limit_mode(const PreconditionerSpec& spec);
const char* to_string(LimitMode mode);

/// Contract a physics problem fulfils so the stepper-based preconditioner can
/// drive it: ∂t u = N(u) + L u, with an implicit-Euler step
/// u⁺ = (I − c L)⁻¹ (u + c N(u)) per block.
///
/// Instances own work buffers and factorizations, so a single instance must
/// not be shared between concurrent solves.
class Problem {
public:
    virtual ~Problem() = default;

    virtual std::string name() const = 0;
    virtual const BlockLayout& layout() const = 0;
    std::size_t size() const { return layout().size(); }

    virtual double parameter() const = 0;
    virtual void set_parameter(double value) = 0;
    /// Name of the continuation parameter (Ra, Re, lambda).
    virtual std::string parameter_name() const { return "lambda"; }
    /// All physical parameters, used for snapshot headers.
    virtual std::map<std::string, double> parameters() const { return {{parameter_name(), parameter()}}; }

    /// Map a block's Δt to (c, κ) at the current parameter. Default: c = Δt, κ = 1.
    virtual BlockScale scale_block(std::size_t block, double delta_t) const;
    std::vector<BlockScale> resolve(const PreconditionerSpec& spec) const;

    /// Nonlinear plus forcing terms, evaluated after any preliminary solves.
    virtual void eval_N(std::span<const double> state, std::span<double> out) = 0;
    /// Linear diffusive operator (homogeneous part).
    virtual void apply_L(std::span<const double> x, std::span<double> out) = 0;
    /// Action of the linearization of N about `base` on `dir`.
    virtual void eval_dN(std::span<const double> base, std::span<const double> dir, std::span<double> out) = 0;
    /// (I − c_b L_b)⁻¹ applied block-wise.
    virtual void solve_shifted(std::span<const BlockScale> scales, std::span<const double> rhs,
                               std::span<double> out) = 0;

    /// One implicit-Euler step. The default realizes (I − cL)⁻¹(u + cN(u)).
    virtual void step(std::span<const BlockScale> scales, std::span<const double> state, std::span<double> out);
    /// One step of the linearized equations about `base` applied to `dir`.
    virtual void linearized_step(std::span<const BlockScale> scales, std::span<const double> base,
                                 std::span<const double> dir, std::span<double> out);

    /// Scalar reported as the branch norm when the diagnostic norm is selected.
    virtual double diagnostic(std::span<const double> state) const;
    virtual std::string diagnostic_name() const { return "rms"; }

    /// Project out components of `x` lying in the null space of L (no-op by default).
    virtual void project_null_modes(std::span<double> x) const { (void)x; }

    /// Clone with identical parameters and grid (fresh buffers).
    virtual std::unique_ptr<Problem> clone() const = 0;
};

}  // namespace adacont
