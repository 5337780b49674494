#include "adacont/toy.hpp"

#include <cmath>
#include <stdexcept>

namespace adacont {

ToyKind parse_toy_kind(const std::string& name) {
    if (name == "sqrt") return ToyKind::Sqrt;
    if (name == "circle") return ToyKind::Circle;
    if (name == "parabola") return ToyKind::Parabola;
    if (name == "pair") return ToyKind::Pair;
    if (name == "flat") return ToyKind::Flat;
    if (name == "square") return ToyKind::Square;
    if (name == "zero") return ToyKind::Zero;
    throw std::invalid_argument("unknown toy kind: " + name);
}

std::string to_string(ToyKind kind) {
    switch (kind) {
        case ToyKind::Sqrt: return "sqrt";
        case ToyKind::Circle: return "circle";
        case ToyKind::Parabola: return "parabola";
        case ToyKind::Pair: return "pair";
        case ToyKind::Flat: return "flat";
        case ToyKind::Square: return "square";
        case ToyKind::Zero: return "zero";
    }
    return "?";
}

ToyProblem::ToyProblem(ToyKind kind, double lambda, double linear, std::size_t n)
    : kind_(kind), lambda_(lambda), linear_(linear) {
    if (n == 0) n = kind == ToyKind::Pair ? 2 : 1;
    if (kind == ToyKind::Pair && n != 2) throw std::invalid_argument("pair toy has exactly two unknowns");
    layout_.add_block("u", {{"u", 1, n}});
}

std::map<std::string, double> ToyProblem::parameters() const { return {{"lambda", lambda_}, {"linear", linear_}}; }

BlockScale ToyProblem::scale_block(std::size_t, double delta_t) const { return {delta_t, delta_t, std::abs(linear_)}; }

void ToyProblem::eval_N(std::span<const double> u, std::span<double> out) {
    const double l = lambda_;
    for (std::size_t i = 0; i < u.size(); ++i) {
        switch (kind_) {
            case ToyKind::Sqrt: out[i] = l - u[i] * u[i]; break;
            case ToyKind::Circle: out[i] = u[i] * u[i] + l * l - 1.0; break;
            case ToyKind::Parabola: out[i] = u[i] * u[i] + l - 1.0; break;
            case ToyKind::Flat: out[i] = u[i] - u[i] * u[i]; break;
            case ToyKind::Square: out[i] = u[i] * u[i]; break;
            case ToyKind::Zero: out[i] = 0.0; break;
            case ToyKind::Pair: break;
        }
    }
    if (kind_ == ToyKind::Pair) {
        out[0] = u[0] * u[0] + l - 1.0;
        out[1] = u[1] - u[0];
    }
}

void ToyProblem::apply_L(std::span<const double> x, std::span<double> out) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = linear_ * x[i];
}

void ToyProblem::eval_dN(std::span<const double> u, std::span<const double> v, std::span<double> out) {
    for (std::size_t i = 0; i < u.size(); ++i) {
        switch (kind_) {
            case ToyKind::Sqrt: out[i] = -2.0 * u[i] * v[i]; break;
            case ToyKind::Circle:
            case ToyKind::Parabola:
            case ToyKind::Square: out[i] = 2.0 * u[i] * v[i]; break;
            case ToyKind::Flat: out[i] = (1.0 - 2.0 * u[i]) * v[i]; break;
            case ToyKind::Zero: out[i] = 0.0; break;
            case ToyKind::Pair: break;
        }
    }
    if (kind_ == ToyKind::Pair) {
        out[0] = 2.0 * u[0] * v[0];
        out[1] = v[1] - v[0];
    }
}

void ToyProblem::solve_shifted(std::span<const BlockScale> scales, std::span<const double> rhs,
                               std::span<double> out) {
    const double d = 1.0 - scales[0].c * linear_;
    for (std::size_t i = 0; i < rhs.size(); ++i) out[i] = rhs[i] / d;
}

}  // namespace adacont
