#pragma once

#include "adacont/problem.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <cstdint>
#include <map>
#include <memory>
#include <utility>

namespace adacont {

struct DdcParams {
    double ra = 2000.0;
    double pr = 1.0;
    double tau = 1.0 / 11.0;
    std::size_t nx = 48;  // cells along x (vertical)
    std::size_t nz = 48;  // cells along z (horizontal)
    double lx = 1.0;
};

/// Two-dimensional doubly diffusive convection in a closed cavity heated and
/// salted from the side z = 1, x vertical:
///
///   ∂t u = −(u·∇)u + Pr(−∇p + Ra(T − C)x̂ + ∇²u),  ∇·u = 0
///   ∂t T = −u·∇T + ∇²T
///   ∂t C = −u·∇C + τ∇²C
///
/// Staggered grid: T, C, p at cell centres, u on interior x-faces, w on
/// interior z-faces. The wall values (no-slip, T = C = 0 at z = 0 and 1 at
/// z = 1, insulating at x = 0, L_x) enter through ghost cells.
///
/// N(u) carries advection, buoyancy, the Dirichlet wall data and −∇p, where
/// p solves the pressure Poisson problem with the rotational Neumann datum
/// (N − Pr∇×∇×u)·n. It does not depend on Δt.
class DdcProblem final : public Problem {
public:
    using SpMat = Eigen::SparseMatrix<double>;

    explicit DdcProblem(DdcParams params = {});

    std::string name() const override { return "ddc2d"; }
    const BlockLayout& layout() const override { return layout_; }
    double parameter() const override { return params_.ra; }
    void set_parameter(double ra) override { params_.ra = ra; }
    std::string parameter_name() const override { return "Ra"; }
    std::map<std::string, double> parameters() const override;

    void eval_N(std::span<const double> state, std::span<double> out) override;
    void apply_L(std::span<const double> x, std::span<double> out) override;
    void eval_dN(std::span<const double> base, std::span<const double> dir, std::span<double> out) override;
    void solve_shifted(std::span<const BlockScale> scales, std::span<const double> rhs, std::span<double> out) override;

    double diagnostic(std::span<const double> state) const override { return kinetic_energy(state); }
    std::string diagnostic_name() const override { return "E"; }

    std::unique_ptr<Problem> clone() const override { return std::make_unique<DdcProblem>(*this); }

    const DdcParams& params() const { return params_; }
    double hx() const { return hx_; }
    double hz() const { return hz_; }
    std::size_t n_u() const { return (params_.nx - 1) * params_.nz; }
    std::size_t n_w() const { return params_.nx * (params_.nz - 1); }
    std::size_t n_cells() const { return params_.nx * params_.nz; }

    /// Motionless state with T = C = z.
    Vec conduction_state() const;
    /// ½ · cell average of u² + w², face values averaged to centres.
    double kinetic_energy(std::span<const double> state) const;
    /// Discretely divergence-free velocity from a random smooth streamfunction,
    /// plus smooth random T and C around the conduction profile.
    Vec random_state(std::uint64_t seed, double amplitude = 1.0) const;
    /// Conduction state plus one convection roll of the given amplitude.
    Vec perturbed_conduction(double amplitude) const;

    /// Cell divergence of the velocity part of a state (wall normal velocity zero).
    Vec divergence(std::span<const double> state) const;

    /// Velocity after the explicit and pressure stages of one split step,
    /// including wall-normal components: {u on all x-faces, w on all z-faces}.
    struct FaceVelocity {
        Vec u;  // (nx + 1) × nz
        Vec w;  // nx × (nz + 1)
    };
    FaceVelocity pressure_stage(std::span<const double> state, double delta_t);
    /// Divergence of a full face velocity, per cell.
    Vec divergence(const FaceVelocity& v) const;

    /// March the stepper in pseudo time with one Δt on every block.
    Vec integrate(std::span<const double> state, double delta_t, int steps);

    /// Homogeneous Laplacians: 0 = u faces, 1 = w faces, 2 = cells (T, C).
    const SpMat& laplacian(int kind) const { return *lap_[kind]; }

    /// Largest pressure compatibility defect seen so far (relative).
    double compatibility_defect() const { return compat_defect_; }

private:
    /// N_e − ∇p on interior faces, p from the rotational pressure problem.
    void project_momentum(std::span<const double> ne_u, std::span<const double> ne_w, std::span<const double> u,
                          std::span<const double> w, std::span<double> out_u, std::span<double> out_w);
    Vec solve_pressure(Vec rhs);
    const Eigen::SimplicialLDLT<SpMat>& shifted_solver(int kind, double a);

    DdcParams params_;
    double hx_, hz_;
    BlockLayout layout_;
    std::shared_ptr<const SpMat> lap_[3];
    std::shared_ptr<const SpMat> pressure_matrix_;
    std::shared_ptr<const Eigen::SimplicialLDLT<SpMat>> pressure_;
    std::map<std::pair<int, double>, std::shared_ptr<const Eigen::SimplicialLDLT<SpMat>>> shifted_;
    double compat_defect_ = 0.0;
};

}  // namespace adacont
