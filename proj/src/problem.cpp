#include "adacont/problem.hpp"

#include <cmath>
#include <stdexcept>

namespace adacont {

PreconditionerSpec PreconditionerSpec::uniform(const BlockLayout& layout, double delta_t) {
    std::vector<PreconditionerBlock> blocks;
    for (const auto& b : layout.blocks()) blocks.push_back({b.name, delta_t, false});
    return PreconditionerSpec(std::move(blocks));
}

PreconditionerBlock& PreconditionerSpec::at(std::string_view name) {
    for (auto& b : blocks_) {
        if (b.name == name) return b;
    }
    throw std::out_of_range("preconditioner has no block " + std::string(name));
}

const PreconditionerBlock& PreconditionerSpec::at(std::string_view name) const {
    for (const auto& b : blocks_) {
        if (b.name == name) return b;
    }
    throw std::out_of_range("preconditioner has no block " + std::string(name));
}

void PreconditionerSpec::set_delta_t(std::string_view name, double delta_t) {
    auto& b = at(name);
    b.delta_t = delta_t;
    b.follows_parameter = false;
}

void PreconditionerSpec::validate(const BlockLayout& layout) const {
    if (blocks_.size() != layout.blocks().size()) {
        throw std::invalid_argument("preconditioner block count does not match the problem layout");
    }
    for (const auto& lb : layout.blocks()) {
        int seen = 0;
        for (const auto& b : blocks_) {
            if (b.name == lb.name) {
                ++seen;
                if (!b.follows_parameter && !(b.delta_t > 0.0)) {
                    throw std::invalid_argument("block " + b.name + ": delta_t must be > 0");
                }
            }
        }
        if (seen != 1) throw std::invalid_argument("block " + lb.name + " must appear exactly once");
    }
}

LimitMode limit_mode(double delta_t) {
    if (delta_t < 1e-6) return LimitMode::Identity;
    if (delta_t > 1e6) return LimitMode::Stokes;
    return LimitMode::Mixed;
}

LimitMode limit_mode(const PreconditionerSpec& spec) {
    // Mixed wins as soon as blocks disagree.
    bool first = true;
    LimitMode mode = LimitMode::Mixed;
    for (const auto& b : spec.blocks()) {
        auto m = limit_mode(b.delta_t);
        if (first) {
            mode = m;
            first = false;
        } else if (m != mode) {
            return LimitMode::Mixed;
        }
    }
    return mode;
}

const char* to_string(LimitMode mode) {
    switch (mode) {
        case LimitMode::Identity: return "identity";
        case LimitMode::Mixed: return "mixed";
        case LimitMode::Stokes: return "stokes";
    }
    return "?";
}

double Problem::diagnostic(std::span<const double> state) const {
    return state.empty() ? 0.0 : norm2(state) / std::sqrt(static_cast<double>(state.size()));
}

BlockScale Problem::scale_block(std::size_t, double delta_t) const { return {delta_t, delta_t, 1.0}; }

std::vector<BlockScale> Problem::resolve(const PreconditionerSpec& spec) const {
    spec.validate(layout());
    std::vector<BlockScale> out;
    const auto& blocks = layout().blocks();
    out.reserve(blocks.size());
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const auto& pb = spec.at(blocks[i].name);
        double dt = pb.follows_parameter ? parameter() : pb.delta_t;
        if (!(dt > 0.0)) throw std::invalid_argument("block " + pb.name + ": resolved delta_t must be > 0");
        out.push_back(scale_block(i, dt));
    }
    return out;
}

void Problem::step(std::span<const BlockScale> scales, std::span<const double> state, std::span<double> out) {
    Vec rhs(state.size());
    eval_N(state, rhs);
    for (std::size_t b = 0; b < layout().blocks().size(); ++b) {
        const auto& blk = layout().blocks()[b];
        for (std::size_t i = blk.offset; i < blk.offset + blk.size; ++i) rhs[i] = state[i] + scales[b].c * rhs[i];
    }
    solve_shifted(scales, rhs, out);
}

void Problem::linearized_step(std::span<const BlockScale> scales, std::span<const double> base,
                              std::span<const double> dir, std::span<double> out) {
    Vec rhs(dir.size());
    eval_dN(base, dir, rhs);
    for (std::size_t b = 0; b < layout().blocks().size(); ++b) {
        const auto& blk = layout().blocks()[b];
        for (std::size_t i = blk.offset; i < blk.offset + blk.size; ++i) rhs[i] = dir[i] + scales[b].c * rhs[i];
    }
    solve_shifted(scales, rhs, out);
}

}  // namespace adacont
