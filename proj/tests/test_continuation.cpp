#include <doctest.h>

#include "adacont/continuation.hpp"
#include "adacont/toy.hpp"

#include <cmath>
#include <random>

using namespace adacont;

namespace {

BranchPoint pt(Vec u, double lambda) {
    BranchPoint p;
    p.state = std::move(u);
    p.lambda = lambda;
    p.norm = rms_norm(p.state);
    return p;
}

ContinuationConfig toy_config() {
    ContinuationConfig c;
    c.newton_tol = 1e-12;
    c.krylov_tol = 1e-10;
    c.delta_lambda_init = 0.1;
    c.delta_lambda_max = 0.5;
    return c;
}

int count_direction_changes(const std::vector<BranchPoint>& pts) {
    int changes = 0;
    double prev = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const double d = pts[i].lambda - pts[i - 1].lambda;
        if (d == 0.0) continue;
        if (prev != 0.0 && (d > 0) != (prev > 0)) ++changes;
        prev = d;
    }
    return changes;
}

}  // namespace

TEST_SUITE("continuation") {
    TEST_CASE("constant, linear and quadratic prediction") {
        auto [u0, l0] = predict(PredictorHistory({pt({5.0}, 0.0)}), 1.0);
        CHECK(u0[0] == 5.0);
        CHECK(l0 == 1.0);

        auto [u1, l1] = predict(PredictorHistory({pt({0.0}, 0.0), pt({1.0}, 1.0), pt({2.0}, 2.0)}), 1.0);
        CHECK(u1[0] == doctest::Approx(3.0));
        CHECK(l1 == 3.0);

        auto [u2, l2] = predict(PredictorHistory({pt({0.0}, 0.0), pt({1.0}, 1.0), pt({4.0}, 2.0)}), 1.0);
        CHECK(u2[0] == doctest::Approx(9.0).epsilon(1e-14));
        CHECK(l2 == 3.0);
    }

    TEST_CASE("quadratic prediction is exact on quadratics with uneven spacing") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> d(-2.0, 2.0);
        for (int trial = 0; trial < 50; ++trial) {
            const double a = d(rng), b = d(rng), c = d(rng);
            auto f = [&](double l) { return a * l * l + b * l + c; };
            double l1 = d(rng), l2 = l1 + 0.1 + std::abs(d(rng)), l3 = l2 + 0.1 + std::abs(d(rng));
            const double dl = d(rng);
            PredictorHistory h({pt({f(l1)}, l1), pt({f(l2)}, l2), pt({f(l3)}, l3)});
            auto [u, l] = predict(h, dl);
            CHECK(std::abs(u[0] - f(l3 + dl)) <= 1e-12 * std::max(1.0, std::abs(f(l3 + dl))) * 10);
        }
    }

    TEST_CASE("prediction errors") {
        CHECK_THROWS_WITH(predict(PredictorHistory(), 1.0), "no seed");
        CHECK_THROWS_WITH(predict(PredictorHistory({pt({0.0}, 1.0), pt({1.0}, 1.0)}), 1.0), "degenerate history");
    }

    TEST_CASE("history keeps the three latest points") {
        PredictorHistory h;
        for (int i = 0; i < 5; ++i) h.push(pt({double(i)}, double(i)));
        CHECK(h.size() == 3);
        CHECK(h[0].lambda == 2.0);
        CHECK(h.last().lambda == 4.0);
    }

    TEST_CASE("arclength prediction") {
        auto [u, l] = predict_arclength(PredictorHistory({pt({0.0}, -1.0), pt({0.0}, 0.0)}), 0.5);
        CHECK(u[0] == 0.0);
        CHECK(l == doctest::Approx(0.5));
        auto [u2, l2] = predict_arclength(PredictorHistory({pt({-3.0}, -4.0), pt({0.0}, 0.0)}), 1.0);
        CHECK(u2[0] == doctest::Approx(0.6));
        CHECK(l2 == doctest::Approx(0.8));
        auto [u3, l3] = predict_arclength(PredictorHistory({pt({-3.0}, -4.0), pt({0.0}, 0.0)}), 0.0);
        CHECK(u3[0] == 0.0);
        CHECK(l3 == 0.0);
        CHECK_THROWS_WITH(predict_arclength(PredictorHistory({pt({1.0}, 1.0), pt({1.0}, 1.0)}), 1.0),
                          "stationary history");
    }

    TEST_CASE("secant tangent") {
        auto t = approximate_tangent(PredictorHistory({pt({0.0}, 0.0), pt({0.0}, 2.0)}));
        CHECK(t.tangent_u[0] == 0.0);
        CHECK(t.tangent_lambda == doctest::Approx(1.0));
        t = approximate_tangent(PredictorHistory({pt({0.0}, 0.0), pt({3.0}, 4.0)}));
        CHECK(t.tangent_u[0] == doctest::Approx(0.6));
        CHECK(t.tangent_lambda == doctest::Approx(0.8));
        t = approximate_tangent(PredictorHistory({pt({0.0}, 0.0), pt({-3.0}, -4.0)}));
        CHECK(t.tangent_u[0] == doctest::Approx(-0.6));
        CHECK(t.tangent_lambda == doctest::Approx(-0.8));
        CHECK_THROWS(approximate_tangent(PredictorHistory({pt({1.0}, 1.0), pt({1.0}, 1.0)})));
    }

    TEST_CASE("mode switch on the slope criterion") {
        // Norm is |u| for a scalar state, so the slope is Δu/Δλ.
        CHECK(std::holds_alternative<FixedLambda>(mode_switch(PredictorHistory({pt({0.0}, 0.0), pt({2.0}, 1.0)}), 10.0)));
        auto m = mode_switch(PredictorHistory({pt({0.0}, 0.0), pt({50.0}, 1.0)}), 10.0);
        CHECK(std::holds_alternative<FixedComponent>(m));
        CHECK(std::holds_alternative<FixedLambda>(mode_switch(PredictorHistory({pt({0.0}, 0.0), pt({10.0}, 1.0)}), 10.0)));
        auto m2 = mode_switch(PredictorHistory({pt({0.0, 0.0, 0.0}, 0.0), pt({1.0, -90.0, 3.0}, 1.0)}), 10.0);
        REQUIRE(std::holds_alternative<FixedComponent>(m2));
        CHECK(std::get<FixedComponent>(m2).k == 1);
    }

    TEST_CASE("fixed-parameter Newton on lambda - u^2") {
        ToyProblem p(ToyKind::Sqrt);
        auto spec = PreconditionerSpec::uniform(p.layout(), 1.0);
        auto cfg = toy_config();
        auto r = correct_fixed_parameter(p, spec, Vec{3.0}, 4.0, cfg);
        CHECK(r.state[0] == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(r.lambda == 4.0);
        CHECK(r.stats.newton_iterations >= 1);
        CHECK(r.stats.krylov_iterations_total == static_cast<long>(r.stats.per_newton.size()));
        // Quadratic decay once the residual is small.
        const auto& h = r.stats.metric_history;
        for (std::size_t j = 0; j + 1 < h.size(); ++j) {
            if (h[j] < 1e-2 && h[j] > 0) CHECK(h[j + 1] <= 1.0 * h[j] * h[j]);
        }
    }

    TEST_CASE("fixed-parameter Newton: exact guess and beyond the fold") {
        ToyProblem p(ToyKind::Sqrt);
        auto spec = PreconditionerSpec::uniform(p.layout(), 1.0);
        auto r = correct_fixed_parameter(p, spec, Vec{2.0}, 4.0, toy_config());
        CHECK(r.stats.newton_iterations == 1);
        CHECK(r.stats.per_newton.empty());
        try {
            correct_fixed_parameter(p, spec, Vec{0.1}, -1.0, toy_config());
            FAIL("expected failure");
        } catch (const SolverFailure& e) {
            CHECK(e.kind() == FailureKind::NonConvergence);
        }
    }

    TEST_CASE("fixed-component bordered Newton") {
        ToyProblem p(ToyKind::Pair);
        auto spec = PreconditionerSpec::uniform(p.layout(), 1.0);
        auto r = correct_fixed_component(p, spec, Vec{1.0, 0.7}, 0.4, 0, toy_config());
        CHECK(r.lambda == doctest::Approx(0.0).epsilon(1e-10));
        CHECK(r.state[0] == 1.0);
        CHECK(r.state[1] == doctest::Approx(1.0));

        auto same = correct_fixed_component(p, spec, Vec{1.0, 1.0}, 0.0, 0, toy_config());
        CHECK(same.stats.newton_iterations == 1);
        CHECK(same.state == Vec{1.0, 1.0});

        ToyProblem flat(ToyKind::Flat);
        try {
            correct_fixed_component(flat, PreconditionerSpec::uniform(flat.layout(), 1.0), Vec{0.3}, 0.0, 0,
                                    toy_config());
            FAIL("expected singular border");
        } catch (const SolverFailure& e) {
            CHECK(e.kind() == FailureKind::SingularBorder);
        }
    }

    TEST_CASE("pseudo-arclength on the circle") {
        ToyProblem p(ToyKind::Circle);
        auto spec = PreconditionerSpec::uniform(p.layout(), 1.0);
        auto cfg = toy_config();
        BranchPoint anchor = pt({1.0}, 0.0);
        PseudoArclength t{{0.0}, 1.0, 0.1};
        auto r = correct_pseudo_arclength(p, spec, Vec{1.0}, 0.1, t, anchor, 0.1, cfg);
        CHECK(r.lambda == doctest::Approx(0.1).epsilon(1e-10));
        CHECK(r.state[0] == doctest::Approx(std::sqrt(1.0 - 0.01)).epsilon(1e-10));
        CHECK(std::abs(arclength_residual(t, r.state, r.lambda, anchor, 0.1)) < cfg.newton_tol);

        auto same = correct_pseudo_arclength(p, spec, anchor.state, anchor.lambda, t, anchor, 0.0, cfg);
        CHECK(same.state == anchor.state);
        CHECK(same.lambda == anchor.lambda);
    }

    TEST_CASE("step control schedule") {
        ContinuationConfig c;
        c.delta_lambda_max = 1.0;
        CHECK(adapt_step(0.5, 3, c) == doctest::Approx(0.6));
        CHECK(adapt_step(0.9, 3, c) == 1.0);
        CHECK(adapt_step(0.5, std::nullopt, c) == doctest::Approx(0.45));
        CHECK(adapt_step(0.5, 4, c) == doctest::Approx(0.6));
        for (int n = 5; n <= c.newton_max; ++n) CHECK(adapt_step(0.5, n, c) == 0.5);
        CHECK_THROWS(adapt_step(0.0, 3, c));
        std::mt19937_64 rng(1);
        std::uniform_real_distribution<double> d(1e-6, 1.0);
        for (int i = 0; i < 200; ++i) {
            const double s = d(rng);
            const int n = static_cast<int>(rng() % 12);
            CHECK(adapt_step(s, n, c) <= c.delta_lambda_max);
            CHECK(adapt_step(s, n, c) == adapt_step(s, n, c));
        }
    }

    TEST_CASE("config validation") {
        ContinuationConfig c;
        c.growth_factor = 1.5;
        CHECK_THROWS(c.validate());
        c = {};
        c.shrink_factor = 1.0;
        CHECK_THROWS(c.validate());
        c = {};
        c.delta_lambda_init = 2.0;
        CHECK_THROWS(c.validate());
    }

    TEST_CASE("trace lambda - u^2 from (1,1) to lambda 4") {
        ToyProblem p(ToyKind::Sqrt);
        auto spec = PreconditionerSpec::uniform(p.layout(), 1.0);
        StopRule stop;
        stop.lambda_max = 4.0;
        auto res = trace_branch(p, spec, pt({1.0}, 1.0), toy_config(), stop);
        REQUIRE(res.status == TraceStatus::Completed);
        CHECK(res.points.back().lambda == 4.0);
        for (const auto& q : res.points) CHECK(std::abs(q.state[0] - std::sqrt(q.lambda)) < 1e-8);
        for (std::size_t i = 1; i < res.points.size(); ++i) CHECK(res.points[i].stats.newton_iterations >= 1);
    }

    TEST_CASE("trace with zero points returns the seed") {
        ToyProblem p(ToyKind::Sqrt);
        StopRule stop;
        stop.max_points = 0;
        auto res = trace_branch(p, PreconditionerSpec::uniform(p.layout(), 1.0), pt({1.0}, 1.0), toy_config(), stop);
        CHECK(res.points.size() == 1);
    }

    TEST_CASE("fold traversal on u^2 + lambda - 1 in both modes") {
        ToyProblem p(ToyKind::Parabola);
        auto spec = PreconditionerSpec::uniform(p.layout(), 1.0);
        for (auto mode : {ContinuationMode::FixedParameter, ContinuationMode::PseudoArclength}) {
            auto cfg = toy_config();
            cfg.mode = mode;
            StopRule stop;
            stop.max_points = 60;
            stop.lambda_min = -1.0;
            auto res = trace_branch(p, spec, pt({1.0}, 0.0), cfg, stop);
            INFO(std::string(to_string(res.status)).append(" ").append(res.message));
            REQUIRE(res.status == TraceStatus::Completed);
            // λ increases to the fold at 1, then decreases.
            std::size_t top = 0;
            for (std::size_t i = 0; i < res.points.size(); ++i)
                if (res.points[i].lambda > res.points[top].lambda) top = i;
            CHECK(res.points[top].lambda == doctest::Approx(1.0).epsilon(1e-2));
            CHECK(top > 0);
            CHECK(top + 1 < res.points.size());
            for (std::size_t i = 1; i <= top; ++i) CHECK(res.points[i].lambda > res.points[i - 1].lambda);
            for (std::size_t i = top + 1; i < res.points.size(); ++i)
                CHECK(res.points[i].lambda < res.points[i - 1].lambda);
            CHECK(res.points.back().state[0] < 0.0);
            for (const auto& q : res.points) {
                const double f = q.state[0] * q.state[0] + q.lambda - 1.0;
                CHECK(std::abs(f) < 1e-8);
            }
        }
    }

    TEST_CASE("circle traversed through both folds") {
        ToyProblem p(ToyKind::Circle);
        auto spec = PreconditionerSpec::uniform(p.layout(), 1.0);
        for (auto mode : {ContinuationMode::PseudoArclength, ContinuationMode::FixedParameter}) {
            auto cfg = toy_config();
            cfg.mode = mode;
            cfg.delta_s = 0.1;
            StopRule stop;
            stop.max_points = mode == ContinuationMode::PseudoArclength ? 40 : 120;
            auto res = trace_branch(p, spec, pt({0.6}, 0.8), cfg, stop);
            INFO(std::string(to_string(res.status)).append(" ").append(res.message));
            REQUIRE(res.status == TraceStatus::Completed);
            CHECK(count_direction_changes(res.points) >= 2);
            double lmax = -2, lmin = 2;
            for (const auto& q : res.points) {
                CHECK(std::abs(q.state[0] * q.state[0] + q.lambda * q.lambda - 1.0) < 1e-8);
                lmax = std::max(lmax, q.lambda);
                lmin = std::min(lmin, q.lambda);
            }
            CHECK(lmax > 0.99);
            CHECK(lmin < -0.99);
        }
    }
}
