#include <doctest.h>

#include "adacont/stepper.hpp"
#include "adacont/waleffe.hpp"

#include <cmath>

using namespace adacont;

namespace {

constexpr double pi = 3.14159265358979323846;

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double max_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

PreconditionerSpec split(double dt1, double dt2) {
    return PreconditionerSpec({{"mean", dt1, false}, {"fluct", dt2, false}});
}

Vec perturbed_laminar(const WaleffeProblem& p, std::uint64_t seed, double amp) {
    Vec u = p.laminar_state(), r = p.random_state(seed, amp);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += r[i];
    return u;
}

}  // namespace

TEST_SUITE("waleffe") {
    TEST_CASE("layout and parameters") {
        WaleffeProblem p;
        CHECK(p.size() == 6 * 32 * 32);
        CHECK(p.layout().blocks().size() == 2);
        CHECK(p.layout().block("mean").size == 2 * 1024);
        CHECK(p.layout().field_offset("w_im") == 5 * 1024);
        CHECK(p.parameter() == 100.0);
        p.set_parameter(250.0);
        CHECK(p.parameters().at("Re") == 250.0);
        CHECK_THROWS(p.set_parameter(0.0));
        CHECK_THROWS(WaleffeProblem(WaleffeParams{.alpha = 0.0}));
        auto spec = p.default_preconditioner(2.0);
        spec.validate(p.layout());
        auto sc = p.resolve(spec);
        CHECK(sc[0].c == doctest::Approx(1.0));  // Δt₁ = Re makes the mean shift I − ∇²
        CHECK(sc[1].c == 2.0);
        CHECK(sc[1].kappa == doctest::Approx(1.0 / 250.0));
    }

    TEST_CASE("laminar state is a fixed point for every fluctuation step") {
        WaleffeProblem p;
        const Vec lam = p.laminar_state();
        for (double dt2 : {0.5, 2.0, 10.0}) {
            CHECK(convergence_metric(p, p.default_preconditioner(dt2), lam) < 1e-12);
        }
        // Tiny Δt₁ leaves the roundoff of ∇²u₀ at high modes undamped.
        CHECK(convergence_metric(p, split(1e-3, 1e6), lam) < 1e-10);
        p.set_parameter(2000.0);
        CHECK(convergence_metric(p, p.default_preconditioner(2.0), lam) < 1e-12);
    }

    TEST_CASE("N_u quadrature") {
        WaleffeProblem p;
        Vec s = p.laminar_state();
        CHECK(p.n_u(s) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(p.n_u(s) - 1.0) < 1e-12);
        Vec z(p.size(), 0.0);
        CHECK(p.n_u(z) == 0.0);
        for (std::size_t i = 0; i < 1024; ++i) z[i] = 2.0;
        CHECK(p.n_u(z) == doctest::Approx(4.0).epsilon(1e-14));
        CHECK(p.diagnostic(s) == p.n_u(s));
    }

    TEST_CASE("zero state grows by the forcing only") {
        WaleffeProblem p;
        const double dt1 = 50.0, c = dt1 / 100.0;
        Vec zero(p.size(), 0.0);
        auto r = residual_action(p, split(dt1, 2.0), zero);
        const double amp = std::sqrt(2.0) * pi * pi / 4.0 * c / (1.0 + c * pi * pi / 4.0);
        double err = 0.0;
        const auto& g = p.grid();
        for (std::size_t j = 0; j < g.ny(); ++j)
            for (std::size_t m = 0; m < g.nz(); ++m)
                err = std::max(err, std::abs(r[j * g.nz() + m] - amp * std::sin(pi * g.y(j) / 2.0)));
        CHECK(err < 1e-13);
        CHECK(max_abs(std::span<const double>(r).subspan(1024)) < 1e-14);
    }

    TEST_CASE("fluctuations decay diffusively without a mean flow") {
        WaleffeProblem p;
        Vec s = p.random_state(3, 1.0);
        std::fill(s.begin(), s.begin() + 2048, 0.0);
        const double dt2 = 4.0;
        auto r = residual_action(p, split(1.0, dt2), s);
        Vec lap(p.size()), out(p.size());
        p.apply_L(s, lap);
        auto sc = p.resolve(split(1.0, dt2));
        Vec rhs(lap);
        for (auto& v : rhs) v *= dt2;
        p.solve_shifted(sc, rhs, out);
        const auto fl = [](const Vec& v) { return std::span<const double>(v).subspan(2048); };
        CHECK(max_diff(fl(r), fl(out)) < 1e-12 * max_abs(s));
    }

    TEST_CASE("streamfunction of a single sine mode") {
        WaleffeProblem p;
        const auto& g = p.grid();
        Vec s(p.size(), 0.0);
        Vec expect(g.size());
        const double k2 = pi * pi + 4.0 * 9.0;  // ky = π (mode 2), kz = 3β = 6
        for (std::size_t j = 0; j < g.ny(); ++j)
            for (std::size_t m = 0; m < g.nz(); ++m) {
                const double w = std::sin(pi * (g.y(j) + 1.0)) * std::cos(6.0 * g.z(m));
                s[g.size() + j * g.nz() + m] = w;
                expect[j * g.nz() + m] = -w / k2;
            }
        auto pre = p.preliminary(s);
        double err = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(pre.phi.data[i] - expect[i]));
        CHECK(err < 1e-14);
        CHECK(max_abs(std::span<const double>(reinterpret_cast<const double*>(pre.p.data.data()), 2 * g.size())) ==
              0.0);
        Vec zero(p.size(), 0.0);
        auto z = p.preliminary(zero);
        for (const auto& v : z.phi.data) CHECK(v == cplx(0.0));
    }

    TEST_CASE("pressure against closed-form shifted Poisson solutions") {
        // u₀ = cos(π(y+1)/2), v = sin(π(y+1)/2) e^{iβz}:
        // v ∂_y u₀ = −(π/4)(1 − cos(π(y+1))) e^{iβz}.
        WaleffeProblem p;
        const auto& g = p.grid();
        const double a = p.params().alpha, b = g.beta();
        const std::size_t n = g.size();
        Vec s(p.size(), 0.0);
        for (std::size_t j = 0; j < g.ny(); ++j)
            for (std::size_t m = 0; m < g.nz(); ++m) {
                const std::size_t i = j * g.nz() + m;
                const double y = g.y(j), z = g.z(m);
                s[i] = std::cos(pi * (y + 1) / 2);
                s[2 * n + i] = std::sin(pi * (y + 1) / 2) * std::cos(b * z);
                s[3 * n + i] = std::sin(pi * (y + 1) / 2) * std::sin(b * z);
            }
        auto pre = p.preliminary(s);
        double err = 0.0, scale = 0.0;
        for (std::size_t j = 0; j < g.ny(); ++j)
            for (std::size_t m = 0; m < g.nz(); ++m) {
                const double y = g.y(j), z = g.z(m);
                const cplx expect = cplx(0.0, 2.0 * a) * std::exp(cplx(0.0, b * z)) *
                                    (-pi / 4 / (a * a + b * b) + pi / 4 * std::cos(pi * (y + 1)) / (a * a + b * b + pi * pi));
                err = std::max(err, std::abs(pre.p.data[j * g.nz() + m] - expect));
                scale = std::max(scale, std::abs(expect));
            }
        CHECK(err < 1e-12 * scale);

        // u₀ = cos(βz), w = 1: w ∂_z u₀ = −β sin(βz).
        std::fill(s.begin(), s.end(), 0.0);
        for (std::size_t j = 0; j < g.ny(); ++j)
            for (std::size_t m = 0; m < g.nz(); ++m) {
                s[j * g.nz() + m] = std::cos(b * g.z(m));
                s[4 * n + j * g.nz() + m] = 1.0;
            }
        pre = p.preliminary(s);
        err = 0.0;
        for (std::size_t j = 0; j < g.ny(); ++j)
            for (std::size_t m = 0; m < g.nz(); ++m) {
                const cplx expect = cplx(0.0, 2.0 * a) * (-b * std::sin(b * g.z(m))) / (a * a + b * b);
                err = std::max(err, std::abs(pre.p.data[j * g.nz() + m] - expect));
            }
        CHECK(err < 1e-12);
    }

    TEST_CASE("vorticity forcing matches the left-hand-side form with opposite sign") {
        WaleffeProblem p;
        const auto& g = p.grid();
        const auto& t = p.transforms();
        const Vec s = p.random_state(21, 0.5);
        Vec n_out(p.size());
        p.eval_N(s, n_out);

        const Field2D om = t.forward(p.omega1(s));
        Field2D phi = solve_helmholtz(g, om, 0.0);
        for (auto& v : phi.data) v = -v;
        const Field2D v = p.v1(s), w = p.w1(s);
        const Field2D py = t.inverse(derivative_y(g, phi)), pz = t.inverse(derivative_z(g, phi));
        const Field2D oy = t.inverse(derivative_y(g, om)), oz = t.inverse(derivative_z(g, om));
        Field2D jac(g, Parity::Sine, Representation::Physical), rvw(g, Parity::Sine, Representation::Physical),
            rww(g, Parity::Cosine, Representation::Physical);
        for (std::size_t i = 0; i < g.size(); ++i) {
            jac.data[i] = py.data[i] * oz.data[i] - pz.data[i] * oy.data[i];
            rvw.data[i] = std::real(v.data[i] * std::conj(w.data[i]));
            rww.data[i] = std::norm(w.data[i]) - std::norm(v.data[i]);
        }
        auto dealiased = [&](const Field2D& f) {
            Field2D x = t.forward(f);
            dealias(g, x);
            return x;
        };
        const Field2D js = dealiased(jac), vs = dealiased(rvw), ws = dealiased(rww);
        const Field2D vyy = derivative_y(g, vs, 2), vzz = derivative_z(g, vs, 2),
                      wyz = derivative_y(g, derivative_z(g, ws));
        Field2D lhs(g, Parity::Sine, Representation::Spectral);
        for (std::size_t i = 0; i < g.size(); ++i)
            lhs.data[i] = js.data[i] + 2.0 * (vyy.data[i] - vzz.data[i]) + 2.0 * wyz.data[i];
        const Field2D lhs_phys = t.inverse(lhs);
        double err = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            err = std::max(err, std::abs(n_out[g.size() + i] + lhs_phys.data[i].real()));
            scale = std::max(scale, std::abs(lhs_phys.data[i]));
        }
        CHECK(scale > 1e-3);
        CHECK(err < 1e-12 * scale);
    }

    TEST_CASE("mean-field terms are real") {
        WaleffeProblem p;
        const auto& t = p.transforms();
        const auto& g = p.grid();
        const Vec s = p.random_state(5, 0.7);
        Vec n_out(p.size());
        p.eval_N(s, n_out);
        // A real field has Hermitian z spectrum; so must the mean output.
        for (std::size_t off : {std::size_t{0}, g.size()}) {
            Field2D f(g, off == 0 ? Parity::Cosine : Parity::Sine, Representation::Physical);
            for (std::size_t i = 0; i < g.size(); ++i) f.data[i] = n_out[off + i];
            auto spec = t.forward(f);
            for (std::size_t k = 0; k < g.ny(); ++k)
                for (std::size_t m = 1; m < g.nz(); ++m) {
                    const cplx a = spec.data[k * g.nz() + m], b = spec.data[k * g.nz() + (g.nz() - m)];
                    CHECK(std::abs(a - std::conj(b)) < 1e-13);
                }
        }
    }

    TEST_CASE("parity: Dirichlet fields stay zero at the walls") {
        WaleffeProblem p;
        const auto& g = p.grid();
        const std::size_t n = g.size(), nz = g.nz(), last = (g.ny() - 1) * nz;
        Vec s = perturbed_laminar(p, 8, 0.3);
        Vec out(p.size());
        p.step(p.resolve(p.default_preconditioner(2.0)), s, out);
        for (int rep = 0; rep < 3; ++rep) {
            s = out;
            p.step(p.resolve(p.default_preconditioner(2.0)), s, out);
        }
        for (std::size_t off : {n, 2 * n, 3 * n})
            for (std::size_t m = 0; m < nz; ++m) {
                CHECK(std::abs(out[off + m]) < 1e-14);
                CHECK(std::abs(out[off + last + m]) < 1e-14);
            }
    }

    TEST_CASE("Neumann fields keep zero wall slope") {
        WaleffeProblem p;
        const auto& g = p.grid();
        const auto& t = p.transforms();
        Vec out(p.size());
        p.step(p.resolve(p.default_preconditioner(2.0)), perturbed_laminar(p, 12, 0.3), out);
        for (auto field : {0, 4}) {
            Field2D f = field == 0 ? p.u0(out) : p.w1(out);
            auto dy = t.inverse(derivative_y(g, t.forward(f)));
            for (std::size_t m = 0; m < g.nz(); ++m) {
                CHECK(std::abs(dy.data[m]) < 1e-12);
                CHECK(std::abs(dy.data[(g.ny() - 1) * g.nz() + m]) < 1e-12);
            }
        }
    }

    TEST_CASE("jacobian action against central differences") {
        WaleffeProblem p;
        p.set_parameter(400.0);
        const auto spec = p.default_preconditioner(2.0);
        const double eps = 1e-6;
        double worst = 0.0;
        for (std::uint64_t k = 0; k < 20; ++k) {
            const Vec u = perturbed_laminar(p, 100 + k, 0.2);
            const Vec d = p.random_state(500 + k, 1.0);
            Vec up(u), um(u);
            axpy(eps, d, up);
            axpy(-eps, d, um);
            const Vec rp = residual_action(p, spec, up), rm = residual_action(p, spec, um);
            Vec fd(u.size());
            for (std::size_t i = 0; i < fd.size(); ++i) fd[i] = (rp[i] - rm[i]) / (2 * eps);
            worst = std::max(worst, rel_error(jacobian_action(p, spec, u, d), fd));
        }
        CHECK(worst < 1e-5);
    }

    TEST_CASE("jacobian action is linear in the direction") {
        WaleffeProblem p;
        const auto spec = p.default_preconditioner(2.0);
        const Vec u = perturbed_laminar(p, 1, 0.2), d1 = p.random_state(2), d2 = p.random_state(3);
        Vec comb(d1);
        for (std::size_t i = 0; i < comb.size(); ++i) comb[i] = 2.0 * d1[i] - 3.0 * d2[i];
        const Vec a = jacobian_action(p, spec, u, d1), b = jacobian_action(p, spec, u, d2),
                  c = jacobian_action(p, spec, u, comb);
        Vec lin(a);
        for (std::size_t i = 0; i < lin.size(); ++i) lin[i] = 2.0 * a[i] - 3.0 * b[i];
        CHECK(rel_error(c, lin) < 1e-12);
    }

    TEST_CASE("linearization about zero is pure diffusion in the mean block") {
        WaleffeProblem p;
        const auto spec = split(100.0, 2.0);
        Vec zero(p.size(), 0.0);
        const Vec d = p.random_state(31);
        const Vec j = jacobian_action(p, spec, zero, d);
        Vec lap(p.size()), out(p.size());
        p.apply_L(d, lap);
        const auto sc = p.resolve(spec);
        for (std::size_t i = 0; i < 2048; ++i) lap[i] *= sc[0].c;
        for (std::size_t i = 2048; i < lap.size(); ++i) lap[i] *= sc[1].c;
        p.solve_shifted(sc, lap, out);
        CHECK(max_diff(std::span<const double>(j).first(2048), std::span<const double>(out).first(2048)) <
              1e-12 * max_abs(d));
    }

    TEST_CASE("two residual paths agree") {
        WaleffeProblem p;
        const auto spec = p.default_preconditioner(3.0);
        const Vec u = perturbed_laminar(p, 44, 0.3);
        CHECK(rel_error(residual_action(p, spec, u), residual_via_shifted_solve(p, spec, u)) < 1e-12);
    }

    TEST_CASE("small and large step limits") {
        WaleffeProblem p;
        const Vec u = perturbed_laminar(p, 61, 0.3);
        const Vec f = assembled_rhs(p, u);

        const auto tiny = split(1e-8, 1e-8);
        const auto sc = p.resolve(tiny);
        Vec r = residual_action(p, tiny, u);
        for (std::size_t i = 0; i < 2048; ++i) r[i] /= sc[0].c;
        for (std::size_t i = 2048; i < r.size(); ++i) r[i] /= sc[1].c;
        CHECK(rel_error(r, f) < 1e-4);

        // Large Δt: −L⁻¹F on the complement of the constant modes.
        Vec big = residual_action(p, split(1e8, 1e8), u);
        p.project_null_modes(big);
        Vec rhs(f);
        p.project_null_modes(rhs);
        for (auto& v : rhs) v = -v;
        Vec check(p.size());
        p.apply_L(big, check);
        CHECK(rel_error(check, rhs) < 1e-4);
    }

    TEST_CASE("null-mode projection removes only the constants") {
        WaleffeProblem p;
        Vec s = p.random_state(70);
        for (std::size_t i = 0; i < 1024; ++i) s[i] += 3.0;
        Vec q(s);
        p.project_null_modes(q);
        Vec lap_s(p.size()), lap_q(p.size());
        p.apply_L(s, lap_s);
        p.apply_L(q, lap_q);
        CHECK(max_diff(lap_s, lap_q) < 1e-10);
        auto u0 = p.transforms().forward(p.u0(q));
        CHECK(std::abs(u0.data[0]) < 1e-14);
    }
}
