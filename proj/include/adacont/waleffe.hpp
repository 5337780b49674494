#pragma once

#include "adacont/problem.hpp"
#include "adacont/spectral.hpp"

#include <cstdint>
#include <memory>

namespace adacont {

struct WaleffeParams {
    double re = 100.0;
    double alpha = 0.5;
    std::size_t ny = 32;
    std::size_t nz = 32;
    double lz = 3.14159265358979323846;
};

/// Reduced streamwise-averaged shear model: mean fields (u₀, ω₁) and one
/// streamwise harmonic (v₁′, w₁′) of wavenumber α, with ε = 1/Re.
///
/// The state holds six physical planes in block order
///   mean  = {u0, omega1}
///   fluct = {v_re, v_im, w_re, w_im}
/// each ny × nz, row-major in (y, z).
class WaleffeProblem final : public Problem {
public:
    explicit WaleffeProblem(WaleffeParams params = {});

    std::string name() const override { return "waleffe"; }
    const BlockLayout& layout() const override { return layout_; }
    double parameter() const override { return params_.re; }
    void set_parameter(double re) override;
    std::string parameter_name() const override { return "Re"; }
    std::map<std::string, double> parameters() const override;

    /// Mean block: c = Δt₁/Re; fluctuation block: c = Δt₂. κ = ε for both.
    BlockScale scale_block(std::size_t block, double delta_t) const override;

    void eval_N(std::span<const double> state, std::span<double> out) override;
    void apply_L(std::span<const double> x, std::span<double> out) override;
    void eval_dN(std::span<const double> base, std::span<const double> dir, std::span<double> out) override;
    void solve_shifted(std::span<const BlockScale> scales, std::span<const double> rhs, std::span<double> out) override;
    void project_null_modes(std::span<double> x) const override;

    double diagnostic(std::span<const double> state) const override { return n_u(state); }
    std::string diagnostic_name() const override { return "N_u"; }

    std::unique_ptr<Problem> clone() const override { return std::make_unique<WaleffeProblem>(*this); }

    const WaleffeParams& params() const { return params_; }
    const SpectralGrid& grid() const { return grid_; }
    const SpectralTransforms& transforms() const { return *transforms_; }

    /// Mean block follows Re (Δt₁ = Re); fluctuation block uses Δt₂.
    PreconditionerSpec default_preconditioner(double delta_t2 = 2.0) const;

    /// u₀ = √2 sin(πy/2), everything else zero.
    Vec laminar_state() const;
    /// Area average of u₀²: trapezoid rule in y, rectangle rule in z.
    double n_u(std::span<const double> state) const;

    /// Streamfunction φ₁ = (∇⊥²)⁻¹ω₁ and pressure p₁′, both physical.
    struct Preliminary {
        Field2D phi;
        Field2D p;
    };
    Preliminary preliminary(std::span<const double> state) const;

    /// Smooth random state with the correct parities (for property checks).
    Vec random_state(std::uint64_t seed, double amplitude = 1.0) const;

    /// Physical plane views of a state.
    Field2D u0(std::span<const double> state) const;
    Field2D omega1(std::span<const double> state) const;
    Field2D v1(std::span<const double> state) const;
    Field2D w1(std::span<const double> state) const;

private:
    struct SpecState {
        Field2D u0, om, v, w;
    };
    struct Terms {
        Field2D n11, n12, n2v, n2w;  // spectral
    };

    SpecState to_spectral(std::span<const double> state) const;
    Field2D streamfunction(const Field2D& om_spec) const;
    Field2D pressure(const SpecState& a, const SpecState& b) const;
    /// Bilinear part Q(a, b) of N, so N(u) = Q(u, u) + f and dN(u)·d = Q(u, d) + Q(d, u).
    Terms bilinear(const SpecState& a, const SpecState& b) const;
    void write_terms(const Terms& t, std::span<double> out) const;

    WaleffeParams params_;
    SpectralGrid grid_;
    std::shared_ptr<const SpectralTransforms> transforms_;
    BlockLayout layout_;
    Field2D forcing_;  // spectral
};

}  // namespace adacont
