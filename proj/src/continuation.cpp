#include "adacont/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace adacont {

PredictorHistory::PredictorHistory(std::vector<BranchPoint> points) {
    for (auto& p : points) push(std::move(p));
}

void PredictorHistory::push(BranchPoint point) {
    points_.push_back(std::move(point));
    while (points_.size() > capacity) points_.pop_front();
}

void ContinuationConfig::validate() const {
    if (!(growth_factor > 1.0 && growth_factor < 1.4)) throw std::invalid_argument("growth_factor must lie in (1, 1.4)");
    if (!(shrink_factor > 0.0 && shrink_factor < 1.0)) throw std::invalid_argument("shrink_factor must lie in (0, 1)");
    if (!(delta_lambda_init > 0.0)) throw std::invalid_argument("delta_lambda_init must be > 0");
    if (delta_lambda_init > delta_lambda_max) throw std::invalid_argument("delta_lambda_init exceeds delta_lambda_max");
    if (newton_target < 1 || newton_max < 1) throw std::invalid_argument("newton_target and newton_max must be >= 1");
    if (!(newton_tol > 0.0)) throw std::invalid_argument("newton_tol must be > 0");
    if (!(delta_s >= 0.0)) throw std::invalid_argument("delta_s must be >= 0");
    if (max_consecutive_failures < 1) throw std::invalid_argument("max_consecutive_failures must be >= 1");
    krylov().validate();
}

KrylovConfig ContinuationConfig::krylov() const {
    KrylovConfig k;
    k.rel_tol = krylov_tol;
    k.max_iters = krylov_cap;
    return k;
}

std::string mode_name(const CorrectionMode& mode) {
    if (std::holds_alternative<FixedLambda>(mode)) return "fixed_lambda";
    if (auto* fc = std::get_if<FixedComponent>(&mode)) return "fixed_component:" + std::to_string(fc->k);
    return "arclength";
}

double rms_norm(std::span<const double> state) {
    if (state.empty()) return 0.0;
    return norm2(state) / std::sqrt(static_cast<double>(state.size()));
}

double branch_norm(Problem& problem, std::span<const double> state, NormKind kind) {
    return kind == NormKind::Rms ? rms_norm(state) : problem.diagnostic(state);
}

// ---------------------------------------------------------------- prediction

std::pair<Vec, double> predict(const PredictorHistory& history, double delta_lambda) {
    const std::size_t m = history.size();
    if (m == 0) throw std::invalid_argument("no seed");
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            if (history[i].lambda == history[j].lambda) throw std::invalid_argument("degenerate history");
        }
    }
    const auto& p1 = history.last();
    Vec u = p1.state;
    const double lambda = p1.lambda + delta_lambda;
    if (m == 1) return {u, lambda};

    const auto& p2 = history[m - 2];
    const double d12 = p1.lambda - p2.lambda;
    if (m == 2) {
        for (std::size_t i = 0; i < u.size(); ++i) u[i] += (p1.state[i] - p2.state[i]) / d12 * delta_lambda;
        return {u, lambda};
    }

    const auto& p3 = history[m - 3];
    const double d23 = p2.lambda - p3.lambda;
    const double d13 = p1.lambda - p3.lambda;
    const double curv = (delta_lambda + d12) / d13 * delta_lambda;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double s1 = (p1.state[i] - p2.state[i]) / d12;
        const double s2 = (p2.state[i] - p3.state[i]) / d23;
        u[i] += s1 * delta_lambda + (s1 - s2) * curv;
    }
    return {u, lambda};
}

PseudoArclength approximate_tangent(const PredictorHistory& history) {
    if (history.size() < 2) throw std::invalid_argument("tangent needs two points");
    const auto& a = history.previous();
    const auto& b = history.last();
    PseudoArclength t;
    t.tangent_u = sub(b.state, a.state);
    t.tangent_lambda = b.lambda - a.lambda;
    const double len = std::hypot(norm2(t.tangent_u), t.tangent_lambda);
    if (len == 0.0) throw std::invalid_argument("coincident points");
    for (double& v : t.tangent_u) v /= len;
    t.tangent_lambda /= len;
    return t;
}

std::pair<Vec, double> predict_arclength(const PredictorHistory& history, double delta_s) {
    if (history.size() < 2) throw std::invalid_argument("arclength prediction needs two points");
    PseudoArclength t;
    try {
        t = approximate_tangent(history);
    } catch (const std::invalid_argument&) {
        throw std::invalid_argument("stationary history");
    }
    Vec u = history.last().state;
    axpy(delta_s, t.tangent_u, u);
    return {u, history.last().lambda + delta_s * t.tangent_lambda};
}

CorrectionMode mode_switch(const PredictorHistory& history, double switch_constant) {
    if (history.size() < 2) throw std::invalid_argument("mode switch needs two points");
    const auto& a = history.previous();
    const auto& b = history.last();
    const double dl = b.lambda - a.lambda;
    if (dl != 0.0) {
        const double slope = (b.norm - a.norm) / dl;
        if (std::abs(slope) <= switch_constant) return FixedLambda{};
    }
    std::size_t k = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < b.state.size(); ++i) {
        const double d = std::abs(b.state[i] - a.state[i]);
        if (d > best) {
            best = d;
            k = i;
        }
    }
    return FixedComponent{k};
}

// ---------------------------------------------------------------- correction

namespace {

Vec krylov_solve(const LinearOperator& op, const Vec& rhs, const ContinuationConfig& config, SolverStats& stats) {
    auto res = bicgstab(op, rhs, config.krylov());
    stats.add_krylov(res.iterations);
    if (!res.converged()) {
        throw SolverFailure(FailureKind::KrylovFailure, std::string("krylov solve stopped: ") + to_string(res.status) +
                                                            " after " + std::to_string(res.iterations) + " iterations");
    }
    return std::move(res.x);
}

void check_metric(double metric, int corrections, const ContinuationConfig& config) {
    if (!std::isfinite(metric)) throw SolverFailure(FailureKind::NonConvergence, "newton residual is not finite");
    if (corrections >= config.newton_max) {
        throw SolverFailure(FailureKind::NonConvergence,
                            "newton did not converge in " + std::to_string(config.newton_max) + " corrections");
    }
}

BranchPoint make_point(Problem& problem, Vec u, double lambda, SolverStats stats, std::string mode,
                       const ContinuationConfig& config) {
    BranchPoint p;
    p.norm = branch_norm(problem, u, config.norm);
    p.state = std::move(u);
    p.lambda = lambda;
    p.stats = std::move(stats);
    p.mode = std::move(mode);
    return p;
}

}  // namespace

BranchPoint correct_fixed_parameter(Problem& problem, const PreconditionerSpec& spec, std::span<const double> guess,
                                    double lambda, const ContinuationConfig& config) {
    if (!all_finite(guess)) throw std::invalid_argument("guess is not finite");
    PreconditionedSystem sys(problem, spec);
    sys.set_parameter(lambda);
    Vec u(guess.begin(), guess.end());
    SolverStats stats;
    int corrections = 0;
    for (;;) {
        Vec r = sys.residual(u);
        const double m = sys.metric(r);
        stats.metric_history.push_back(m);
        ++stats.newton_iterations;
        if (m < config.newton_tol) break;
        check_metric(m, corrections, config);
        Vec du = krylov_solve([&](std::span<const double> x, std::span<double> y) { sys.jacobian(u, x, y); }, r,
                              config, stats);
        axpy(-1.0, du, u);
        ++corrections;
    }
    return make_point(problem, std::move(u), lambda, std::move(stats), "fixed_lambda", config);
}

BranchPoint correct_fixed_component(Problem& problem, const PreconditionerSpec& spec, std::span<const double> guess,
                                    double lambda_guess, std::size_t k, const ContinuationConfig& config) {
    if (!all_finite(guess)) throw std::invalid_argument("guess is not finite");
    if (k >= guess.size()) throw std::invalid_argument("fixed component index out of range");
    PreconditionedSystem sys(problem, spec);
    Vec u(guess.begin(), guess.end());
    double lambda = lambda_guess;
    SolverStats stats;
    int corrections = 0;
    for (;;) {
        sys.set_parameter(lambda);
        Vec r = sys.residual(u);
        const double m = sys.metric(r);
        stats.metric_history.push_back(m);
        ++stats.newton_iterations;
        if (m < config.newton_tol) break;
        check_metric(m, corrections, config);

        // Column k of the Jacobian is traded for ∂G/∂λ; u_k stays frozen.
        Vec dl = sys.parameter_derivative(u);
        if (norm2(dl) <= 1e-12 * std::max(1.0, norm2(u))) {
            throw SolverFailure(FailureKind::SingularBorder, "residual does not depend on the parameter");
        }
        Vec masked(u.size());
        auto op = [&](std::span<const double> x, std::span<double> y) {
            std::copy(x.begin(), x.end(), masked.begin());
            masked[k] = 0.0;
            sys.jacobian(u, masked, y);
            axpy(x[k], dl, y);
        };
        Vec z = krylov_solve(op, r, config, stats);
        lambda -= z[k];
        z[k] = 0.0;
        axpy(-1.0, z, u);
        if (!std::isfinite(lambda)) throw SolverFailure(FailureKind::NonConvergence, "parameter update is not finite");
        ++corrections;
    }
    return make_point(problem, std::move(u), lambda, std::move(stats), "fixed_component:" + std::to_string(k), config);
}

double arclength_residual(const PseudoArclength& tangent, std::span<const double> u, double lambda,
                          const BranchPoint& anchor, double delta_s) {
    double s = tangent.tangent_lambda * (lambda - anchor.lambda) - delta_s;
    for (std::size_t i = 0; i < u.size(); ++i) s += tangent.tangent_u[i] * (u[i] - anchor.state[i]);
    return s;
}

BranchPoint correct_pseudo_arclength(Problem& problem, const PreconditionerSpec& spec, std::span<const double> guess,
                                     double lambda_guess, const PseudoArclength& tangent, const BranchPoint& anchor,
                                     double delta_s, const ContinuationConfig& config) {
    if (!all_finite(guess)) throw std::invalid_argument("guess is not finite");
    const std::size_t n = guess.size();
    if (tangent.tangent_u.size() != n || anchor.state.size() != n) {
        throw std::invalid_argument("tangent/anchor size mismatch");
    }
    PreconditionedSystem sys(problem, spec);
    Vec u(guess.begin(), guess.end());
    double lambda = lambda_guess;
    SolverStats stats;
    int corrections = 0;
    for (;;) {
        sys.set_parameter(lambda);
        Vec r = sys.residual(u);
        const double sigma = arclength_residual(tangent, u, lambda, anchor, delta_s);
        const double m = sys.metric(r);
        stats.metric_history.push_back(m);
        ++stats.newton_iterations;
        if (m < config.newton_tol && std::abs(sigma) < config.newton_tol) break;
        check_metric(m, corrections, config);

        Vec dl = sys.parameter_derivative(u);
        // The border row is applied as is; only the physics block carries c·P⁻¹.
        auto op = [&](std::span<const double> x, std::span<double> y) {
            sys.jacobian(u, x.first(n), y.first(n));
            axpy(x[n], dl, y.first(n));
            y[n] = dot(tangent.tangent_u, x.first(n)) + tangent.tangent_lambda * x[n];
        };
        Vec rhs(n + 1);
        std::copy(r.begin(), r.end(), rhs.begin());
        rhs[n] = sigma;
        Vec z = krylov_solve(op, rhs, config, stats);
        axpy(-1.0, std::span<const double>(z).first(n), u);
        lambda -= z[n];
        if (!std::isfinite(lambda)) throw SolverFailure(FailureKind::NonConvergence, "parameter update is not finite");
        ++corrections;
    }
    return make_point(problem, std::move(u), lambda, std::move(stats), "arclength", config);
}

// ---------------------------------------------------------------- step control

double adapt_step(double current_step, std::optional<int> converged_in, double step_max,
                  const ContinuationConfig& config) {
    if (!(current_step > 0.0)) throw std::invalid_argument("step must be > 0");
    if (!converged_in) return current_step * config.shrink_factor;
    if (*converged_in <= config.newton_target) return std::min(current_step * config.growth_factor, step_max);
    return current_step;
}

const char* to_string(TraceStatus status) {
    switch (status) {
        case TraceStatus::Completed: return "completed";
        case TraceStatus::StepUnderflow: return "step_underflow";
        case TraceStatus::Failed: return "failed";
    }
    return "?";
}

namespace {

// Most recent points along which the mapped λ is strictly monotone, so the
// divided differences stay defined and never straddle a fold.
PredictorHistory monotone_tail(const PredictorHistory& h, const std::function<BranchPoint(const BranchPoint&)>& map) {
    std::vector<BranchPoint> kept;
    double trend = 0.0;
    for (std::size_t i = h.size(); i-- > 0;) {
        BranchPoint p = map(h[i]);
        if (!kept.empty()) {
            const double d = kept.back().lambda - p.lambda;
            if (d == 0.0 || (trend != 0.0 && (d > 0.0) != (trend > 0.0))) break;
            trend = d;
        }
        kept.push_back(std::move(p));
    }
    std::reverse(kept.begin(), kept.end());
    return PredictorHistory(std::move(kept));
}

double sign_of(double v, double fallback) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : fallback); }

}  // namespace

TraceResult trace_branch(Problem& problem, const PreconditionerSpec& spec, const BranchPoint& seed,
                         const ContinuationConfig& config, const StopRule& stop, const PointObserver& observer) {
    config.validate();
    TraceResult result;
    BranchPoint first = seed;
    first.norm = branch_norm(problem, first.state, config.norm);
    first.mode = "seed";
    result.points.push_back(first);
    if (observer) observer(first);

    PredictorHistory history;
    history.push(first);

    const double lo = stop.lambda_min.value_or(-INFINITY);
    const double hi = stop.lambda_max.value_or(INFINITY);
    auto outside_or_on_bound = [&](double l) { return l <= lo || l >= hi; };

    double step = config.delta_lambda_init;
    double dir = config.direction >= 0 ? 1.0 : -1.0;
    const double ds_max = config.delta_s_max > 0.0 ? config.delta_s_max : config.delta_s;
    double ds = std::min(config.delta_s, ds_max);

    constexpr std::size_t no_comp = static_cast<std::size_t>(-1);
    std::size_t comp = no_comp;  // active frozen component
    double comp_step = 0.0, comp_cap = 0.0, comp_init = 0.0;
    int consecutive_failures = 0;
    int fixed_failures = 0;
    int added = 0;

    auto identity = [](const BranchPoint& p) { return p; };

    while (added < stop.max_points) {
        const BranchPoint& last = history.last();
        CorrectionMode mode = FixedLambda{};
        if (config.mode == ContinuationMode::PseudoArclength) {
            if (history.size() >= 2) mode = approximate_tangent(history);
        } else if (history.size() >= 2) {
            mode = mode_switch(history, config.switch_constant);
            if (std::holds_alternative<FixedLambda>(mode) && fixed_failures >= 2) mode = mode_switch(history, -1.0);
            if (auto* fc = std::get_if<FixedComponent>(&mode)) {
                if (comp != no_comp) fc->k = comp;
                else if (config.fixed_component_index >= 0) fc->k = static_cast<std::size_t>(config.fixed_component_index);
            }
        }

        try {
            BranchPoint pt;
            if (std::holds_alternative<FixedLambda>(mode)) {
                if (comp != no_comp) {
                    // Back from a fold: keep travelling the way λ last moved.
                    dir = sign_of(last.lambda - history.previous().lambda, dir);
                    comp = no_comp;
                }
                double target = last.lambda + dir * step;
                target = std::clamp(target, lo, hi);
                if (target == last.lambda) break;
                auto [guess, lam] = predict(monotone_tail(history, identity), target - last.lambda);
                pt = correct_fixed_parameter(problem, spec, guess, target, config);
                step = adapt_step(step, pt.stats.newton_iterations, config);
                fixed_failures = 0;
            } else if (auto* fc = std::get_if<FixedComponent>(&mode)) {
                const std::size_t k = fc->k;
                if (comp != k) {
                    comp = k;
                    comp_step = last.state[k] - history.previous().state[k];
                    if (comp_step == 0.0) comp_step = config.delta_lambda_init;
                    comp_cap = std::abs(comp_step);
                    comp_init = comp_cap;
                }
                // Extrapolate with u_k playing the role of the parameter.
                auto swap_k = [k](const BranchPoint& p) {
                    BranchPoint q = p;
                    q.lambda = p.state[k];
                    q.state[k] = p.lambda;
                    return q;
                };
                auto [guess, uk] = predict(monotone_tail(history, swap_k), comp_step);
                const double lam_guess = guess[k];
                guess[k] = uk;
                pt = correct_fixed_component(problem, spec, guess, lam_guess, k, config);
                comp_step = sign_of(comp_step, 1.0) *
                            adapt_step(std::abs(comp_step), pt.stats.newton_iterations, comp_cap, config);
                fixed_failures = 0;
            } else {
                const auto& tangent = std::get<PseudoArclength>(mode);
                Vec guess = last.state;
                axpy(ds, tangent.tangent_u, guess);
                const double lam_guess = last.lambda + ds * tangent.tangent_lambda;
                pt = correct_pseudo_arclength(problem, spec, guess, lam_guess, tangent, last, ds, config);
                ds = adapt_step(ds, pt.stats.newton_iterations, ds_max, config);
            }
            consecutive_failures = 0;
            pt.delta_lambda = pt.lambda - last.lambda;
            history.push(pt);
            result.points.push_back(pt);
            ++added;
            if (observer) observer(pt);
            if (outside_or_on_bound(pt.lambda)) break;
        } catch (const SolverFailure& failure) {
            ++consecutive_failures;
            ++result.failures;
            double current = 0.0, floor = 0.0;
            if (std::holds_alternative<FixedLambda>(mode)) {
                ++fixed_failures;
                step = adapt_step(step, std::nullopt, config);
                current = step;
                floor = 1e-12 * config.delta_lambda_init;
            } else if (std::holds_alternative<FixedComponent>(mode)) {
                comp_step *= config.shrink_factor;
                current = std::abs(comp_step);
                floor = 1e-12 * comp_init;
            } else {
                ds = adapt_step(ds, std::nullopt, ds_max, config);
                current = ds;
                floor = 1e-12 * config.delta_s;
            }
            if (current < floor) {
                result.status = TraceStatus::StepUnderflow;
                result.message = std::string("step underflow after ") + failure.what();
                return result;
            }
            if (consecutive_failures >= config.max_consecutive_failures) {
                result.status = TraceStatus::Failed;
                result.message = std::to_string(consecutive_failures) + " consecutive failures, last: " + failure.what();
                return result;
            }
        }
    }
    return result;
}

}  // namespace adacont
