#include <doctest.h>

#include "adacont/stepper.hpp"
#include "adacont/toy.hpp"

using namespace adacont;

TEST_SUITE("stepper") {
    TEST_CASE("scalar toy residual equals -dt/(1+dt)") {
        ToyProblem p(ToyKind::Zero, 0.0, -1.0);
        for (double dt : {2.0, 0.5, 1e-3}) {
            auto r = residual_action(p, PreconditionerSpec::uniform(p.layout(), dt), Vec{1.0});
            CHECK(r[0] == doctest::Approx(-dt / (1.0 + dt)).epsilon(1e-14));
        }
        auto stokes = residual_action(p, PreconditionerSpec::uniform(p.layout(), 1e8), Vec{1.0});
        CHECK(stokes[0] == doctest::Approx(-1.0).epsilon(1e-7));
    }

    TEST_CASE("fixed point is stepper invariant for every dt") {
        ToyProblem p(ToyKind::Sqrt, 4.0, 0.0);
        for (double dt : {1e-8, 1.0, 1e8}) {
            auto r = residual_action(p, PreconditionerSpec::uniform(p.layout(), dt), Vec{2.0});
            CHECK(r[0] == 0.0);
            CHECK(convergence_metric(p, PreconditionerSpec::uniform(p.layout(), dt), Vec{2.0}) == 0.0);
        }
    }

    TEST_CASE("jacobian action of N=u^2, L=-1") {
        ToyProblem p(ToyKind::Square, 0.0, -1.0);
        auto j = jacobian_action(p, PreconditionerSpec::uniform(p.layout(), 1.0), Vec{3.0}, Vec{1.0});
        CHECK(j[0] == doctest::Approx(2.5));
    }

    TEST_CASE("linear problem: jacobian action equals residual action") {
        ToyProblem p(ToyKind::Zero, 0.0, -1.0, 3);
        auto spec = PreconditionerSpec::uniform(p.layout(), 0.7);
        Vec v{0.3, -1.2, 2.0};
        auto j = jacobian_action(p, spec, Vec{5.0, 5.0, 5.0}, v);
        auto r = residual_action(p, spec, v);
        for (int i = 0; i < 3; ++i) CHECK(j[i] == doctest::Approx(r[i]).epsilon(1e-15));
    }

    TEST_CASE("metric cancels the scalar preconditioner") {
        ToyProblem p(ToyKind::Zero, 0.0, -1.0);
        for (double dt : {1e-4, 0.06, 1.0, 1e2, 1e6}) {
            CHECK(convergence_metric(p, PreconditionerSpec::uniform(p.layout(), dt), Vec{1.0}) ==
                  doctest::Approx(1.0).epsilon(1e-10));
        }
    }

    TEST_CASE("metric is homogeneous on linear problems") {
        ToyProblem p(ToyKind::Zero, 0.0, -1.0, 4);
        auto spec = PreconditionerSpec::uniform(p.layout(), 3.0);
        Vec u{1.0, -2.0, 0.5, 4.0}, u2 = u;
        for (auto& v : u2) v *= 2.0;
        CHECK(convergence_metric(p, spec, u2) == doctest::Approx(2.0 * convergence_metric(p, spec, u)));
    }

    TEST_CASE("two code paths give the same residual") {
        ToyProblem p(ToyKind::Square, 0.0, -0.5, 3);
        auto spec = PreconditionerSpec::uniform(p.layout(), 0.3);
        Vec u{0.2, -0.4, 1.1};
        auto a = residual_action(p, spec, u);
        auto b = residual_via_shifted_solve(p, spec, u);
        for (int i = 0; i < 3; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-14));
    }

    TEST_CASE("parameter derivative by central differences") {
        ToyProblem p(ToyKind::Circle, 0.6, 0.0);
        PreconditionedSystem sys(p, PreconditionerSpec::uniform(p.layout(), 1.0));
        auto d = sys.parameter_derivative(Vec{0.8});
        CHECK(d[0] == doctest::Approx(1.2).epsilon(1e-8));
        CHECK(p.parameter() == 0.6);
    }

    TEST_CASE("limit classification") {
        CHECK(limit_mode(1e-8) == LimitMode::Identity);
        CHECK(limit_mode(1.0) == LimitMode::Mixed);
        CHECK(limit_mode(1e8) == LimitMode::Stokes);
        ToyProblem p(ToyKind::Zero);
        CHECK(limit_mode(PreconditionerSpec::uniform(p.layout(), 1e8)) == LimitMode::Stokes);
    }

    TEST_CASE("spec validation") {
        ToyProblem p(ToyKind::Zero);
        CHECK_THROWS(PreconditionerSpec::uniform(p.layout(), -1.0).validate(p.layout()));
        PreconditionerSpec wrong({{"other", 1.0, false}});
        CHECK_THROWS(wrong.validate(p.layout()));
    }
}
