#include "adacont/stepper.hpp"

#include <algorithm>
#include <cmath>

namespace adacont {

Vec residual_action(Problem& problem, const PreconditionerSpec& spec, std::span<const double> state) {
    auto scales = problem.resolve(spec);
    Vec out(state.size());
    problem.step(scales, state, out);
    axpy(-1.0, state, out);
    return out;
}

Vec jacobian_action(Problem& problem, const PreconditionerSpec& spec, std::span<const double> base,
                    std::span<const double> dir) {
    auto scales = problem.resolve(spec);
    Vec out(dir.size());
    problem.linearized_step(scales, base, dir, out);
    axpy(-1.0, dir, out);
    return out;
}

double scaled_residual_norm(const BlockLayout& layout, std::span<const BlockScale> scales,
                            std::span<const double> residual) {
    double sum = 0.0;
    for (std::size_t b = 0; b < layout.blocks().size(); ++b) {
        const auto& blk = layout.blocks()[b];
        const double w = (1.0 + scales[b].kappa * scales[b].delta_t) / scales[b].delta_t;
        double part = 0.0;
        for (std::size_t i = blk.offset; i < blk.offset + blk.size; ++i) part += residual[i] * residual[i];
        sum += w * w * part;
    }
    return std::sqrt(sum);
}

double convergence_metric(Problem& problem, const PreconditionerSpec& spec, std::span<const double> state) {
    auto scales = problem.resolve(spec);
    Vec r(state.size());
    problem.step(scales, state, r);
    axpy(-1.0, state, r);
    return scaled_residual_norm(problem.layout(), scales, r);
}

Vec assembled_rhs(Problem& problem, std::span<const double> state) {
    Vec n(state.size()), l(state.size());
    problem.eval_N(state, n);
    problem.apply_L(state, l);
    axpy(1.0, l, n);
    return n;
}

Vec residual_via_shifted_solve(Problem& problem, const PreconditionerSpec& spec, std::span<const double> state) {
    auto scales = problem.resolve(spec);
    Vec f = assembled_rhs(problem, state);
    Vec out(state.size());
    problem.solve_shifted(scales, f, out);
    const auto& blocks = problem.layout().blocks();
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        for (std::size_t i = blocks[b].offset; i < blocks[b].offset + blocks[b].size; ++i) out[i] *= scales[b].c;
    }
    return out;
}

PreconditionedSystem::PreconditionedSystem(Problem& problem, PreconditionerSpec spec)
    : problem_(problem), spec_(std::move(spec)) {
    scales_ = problem_.resolve(spec_);
    work_.resize(problem_.size());
}

void PreconditionedSystem::set_parameter(double lambda) {
    if (lambda == problem_.parameter()) return;
    problem_.set_parameter(lambda);
    scales_ = problem_.resolve(spec_);
}

Vec PreconditionedSystem::residual(std::span<const double> state) {
    Vec out(state.size());
    problem_.step(scales_, state, out);
    axpy(-1.0, state, out);
    return out;
}

void PreconditionedSystem::jacobian(std::span<const double> base, std::span<const double> dir, std::span<double> out) {
    problem_.linearized_step(scales_, base, dir, out);
    axpy(-1.0, dir, out);
}

double PreconditionedSystem::metric(std::span<const double> residual) const {
    return scaled_residual_norm(problem_.layout(), scales_, residual);
}

Vec PreconditionedSystem::parameter_derivative(std::span<const double> state) {
    const double lambda = problem_.parameter();
    const double h = 1e-5 * std::max(1.0, std::abs(lambda));
    set_parameter(lambda + h);
    Vec plus = residual(state);
    set_parameter(lambda - h);
    Vec minus = residual(state);
    set_parameter(lambda);
    for (std::size_t i = 0; i < plus.size(); ++i) plus[i] = (plus[i] - minus[i]) / (2.0 * h);
    return plus;
}

}  // namespace adacont
