#pragma once

#include "adacont/problem.hpp"

namespace adacont {

/// Algebraic test problems written as ∂t u = N(u, λ) + L·u with scalar L.
enum class ToyKind {
    Sqrt,      // λ − u²
    Circle,    // u² + λ² − 1
    Parabola,  // u² + λ − 1
    Pair,      // (u₁² + λ − 1, u₂ − u₁)
    Flat,      // u − u², no λ dependence
    Square,    // u²
    Zero,      // N = 0 (pure linear problem)
};

ToyKind parse_toy_kind(const std::string& name);
std::string to_string(ToyKind kind);

class ToyProblem final : public Problem {
public:
    /// `linear` is the scalar L applied to every component; κ = |L|.
    ToyProblem(ToyKind kind, double lambda = 0.0, double linear = 0.0, std::size_t n = 0);

    std::string name() const override { return "toy"; }
    const BlockLayout& layout() const override { return layout_; }
    double parameter() const override { return lambda_; }
    void set_parameter(double value) override { lambda_ = value; }
    std::map<std::string, double> parameters() const override;

    BlockScale scale_block(std::size_t block, double delta_t) const override;

    void eval_N(std::span<const double> state, std::span<double> out) override;
    void apply_L(std::span<const double> x, std::span<double> out) override;
    void eval_dN(std::span<const double> base, std::span<const double> dir, std::span<double> out) override;
    void solve_shifted(std::span<const BlockScale> scales, std::span<const double> rhs, std::span<double> out) override;

    std::unique_ptr<Problem> clone() const override { return std::make_unique<ToyProblem>(*this); }

    ToyKind kind() const { return kind_; }
    double linear() const { return linear_; }

private:
    ToyKind kind_;
    double lambda_;
    double linear_;
    BlockLayout layout_;
};

}  // namespace adacont
