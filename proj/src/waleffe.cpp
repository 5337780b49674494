#include "adacont/waleffe.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace adacont {

namespace {

constexpr double kPi = 3.14159265358979323846;

Field2D real_plane(const SpectralGrid& g, std::span<const double> state, std::size_t offset, Parity p) {
    Field2D f(g, p, Representation::Physical);
    for (std::size_t i = 0; i < g.size(); ++i) f.data[i] = state[offset + i];
    return f;
}

Field2D complex_plane(const SpectralGrid& g, std::span<const double> state, std::size_t re, std::size_t im, Parity p) {
    Field2D f(g, p, Representation::Physical);
    for (std::size_t i = 0; i < g.size(); ++i) f.data[i] = {state[re + i], state[im + i]};
    return f;
}

Field2D product(const Field2D& a, const Field2D& b, Parity p) {
    Field2D out = a;
    out.parity = p;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b.data[i];
    return out;
}

Field2D& scale(Field2D& f, cplx s) {
    for (auto& v : f.data) v *= s;
    return f;
}

Field2D& add(Field2D& f, const Field2D& g, cplx s = 1.0) {
    for (std::size_t i = 0; i < f.data.size(); ++i) f.data[i] += s * g.data[i];
    return f;
}

}  // namespace

WaleffeProblem::WaleffeProblem(WaleffeParams params)
    : params_(params), grid_(params.ny, params.nz, params.lz) {
    if (!(params_.re > 0.0)) throw std::invalid_argument("Re must be > 0");
    if (!(params_.alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
    transforms_ = std::make_shared<const SpectralTransforms>(grid_);
    const std::size_t ny = grid_.ny(), nz = grid_.nz();
    layout_.add_block("mean", {{"u0", ny, nz}, {"omega1", ny, nz}});
    layout_.add_block("fluct", {{"v_re", ny, nz}, {"v_im", ny, nz}, {"w_re", ny, nz}, {"w_im", ny, nz}});

    Field2D f(grid_, Parity::Cosine, Representation::Physical);
    const double amp = std::sqrt(2.0) * kPi * kPi / 4.0;
    for (std::size_t j = 0; j < ny; ++j)
        for (std::size_t m = 0; m < nz; ++m) f.data[j * nz + m] = amp * std::sin(kPi * grid_.y(j) / 2.0);
    forcing_ = transforms_->forward(f);
}

void WaleffeProblem::set_parameter(double re) {
    if (!(re > 0.0)) throw std::invalid_argument("Re must be > 0");
    params_.re = re;
}

std::map<std::string, double> WaleffeProblem::parameters() const {
    return {{"Re", params_.re}, {"alpha", params_.alpha}, {"Lz", params_.lz}};
}

BlockScale WaleffeProblem::scale_block(std::size_t block, double delta_t) const {
    const double eps = 1.0 / params_.re;
    if (block == 0) return {delta_t, eps * delta_t, eps};
    return {delta_t, delta_t, eps};
}

PreconditionerSpec WaleffeProblem::default_preconditioner(double delta_t2) const {
    return PreconditionerSpec({{"mean", params_.re, true}, {"fluct", delta_t2, false}});
}

Field2D WaleffeProblem::u0(std::span<const double> s) const { return real_plane(grid_, s, 0, Parity::Cosine); }
Field2D WaleffeProblem::omega1(std::span<const double> s) const {
    return real_plane(grid_, s, grid_.size(), Parity::Sine);
}
Field2D WaleffeProblem::v1(std::span<const double> s) const {
    const std::size_t n = grid_.size();
    return complex_plane(grid_, s, 2 * n, 3 * n, Parity::Sine);
}
Field2D WaleffeProblem::w1(std::span<const double> s) const {
    const std::size_t n = grid_.size();
    return complex_plane(grid_, s, 4 * n, 5 * n, Parity::Cosine);
}

WaleffeProblem::SpecState WaleffeProblem::to_spectral(std::span<const double> state) const {
    if (state.size() != layout_.size()) throw std::invalid_argument("waleffe state has the wrong size");
    const auto& t = *transforms_;
    return {t.forward(u0(state)), t.forward(omega1(state)), t.forward(v1(state)), t.forward(w1(state))};
}

Field2D WaleffeProblem::streamfunction(const Field2D& om_spec) const {
    // ω = ∇²φ with φ = 0 at the walls: sine parity has no null mode.
    Field2D phi = solve_helmholtz(grid_, om_spec, 0.0);
    return scale(phi, -1.0);
}

Field2D WaleffeProblem::pressure(const SpecState& a, const SpecState& b) const {
    const auto& t = *transforms_;
    Field2D ua = a.u0;
    dealias(grid_, ua);
    Field2D vb = b.v, wb = b.w;
    dealias(grid_, vb);
    dealias(grid_, wb);
    Field2D rhs = product(t.inverse(vb), t.inverse(derivative_y(grid_, ua)), Parity::Cosine);
    add(rhs, product(t.inverse(wb), t.inverse(derivative_z(grid_, ua)), Parity::Cosine));
    Field2D rhs_s = t.forward(rhs);
    dealias(grid_, rhs_s);
    const double alpha = params_.alpha;
    Field2D p = solve_helmholtz(grid_, rhs_s, alpha * alpha);
    return scale(p, cplx(0.0, 2.0 * alpha));
}

WaleffeProblem::Terms WaleffeProblem::bilinear(const SpecState& a_in, const SpecState& b_in) const {
    const auto& t = *transforms_;
    const auto& g = grid_;
    SpecState a = a_in, b = b_in;
    for (auto* f : {&a.u0, &a.om, &a.v, &a.w, &b.u0, &b.om, &b.v, &b.w}) dealias(g, *f);

    auto phys = [&](const Field2D& s) { return t.inverse(s); };
    auto spec = [&](const Field2D& p) {
        Field2D s = t.forward(p);
        dealias(g, s);
        return s;
    };

    const Field2D phi = streamfunction(a.om);
    const Field2D phi_y = phys(derivative_y(g, phi)), phi_z = phys(derivative_z(g, phi));

    // −J(φ_a, f_b) = −(∂yφ ∂z f − ∂zφ ∂y f)
    auto minus_jacobian = [&](const Field2D& f) {
        const Parity p = f.parity;
        Field2D j = product(phi_y, phys(derivative_z(g, f)), p);
        add(j, product(phi_z, phys(derivative_y(g, f)), p), -1.0);
        scale(j, -1.0);
        return spec(j);
    };

    Terms out;
    out.n11 = minus_jacobian(b.u0);
    out.n12 = minus_jacobian(b.om);

    // Reynolds stresses −2(∂y² − ∂z²)ℜ(v w*) − 2∂y∂z ℜ(w w* − v v*).
    const Field2D va = phys(a.v), wa = phys(a.w), vb = phys(b.v), wb = phys(b.w);
    Field2D rvw(g, Parity::Sine, Representation::Physical), rww(g, Parity::Cosine, Representation::Physical);
    for (std::size_t i = 0; i < g.size(); ++i) {
        rvw.data[i] = std::real(va.data[i] * std::conj(wb.data[i]));
        rww.data[i] = std::real(wa.data[i] * std::conj(wb.data[i]) - va.data[i] * std::conj(vb.data[i]));
    }
    const Field2D rvw_s = spec(rvw), rww_s = spec(rww);
    add(out.n12, derivative_y(g, rvw_s, 2), -2.0);
    add(out.n12, derivative_z(g, rvw_s, 2), 2.0);
    add(out.n12, derivative_y(g, derivative_z(g, rww_s)), -2.0);

    // −iα u₀ v⊥ − ∇⊥p
    const Field2D p = pressure(a, b);
    const Field2D ua = phys(a.u0);
    const cplx ia(0.0, params_.alpha);
    out.n2v = spec(product(ua, vb, Parity::Sine));
    scale(out.n2v, -ia);
    add(out.n2v, derivative_y(g, p), -1.0);
    out.n2w = spec(product(ua, wb, Parity::Cosine));
    scale(out.n2w, -ia);
    add(out.n2w, derivative_z(g, p), -1.0);
    return out;
}

void WaleffeProblem::write_terms(const Terms& terms, std::span<double> out) const {
    const auto& t = *transforms_;
    const std::size_t n = grid_.size();
    const Field2D a = t.inverse(terms.n11), b = t.inverse(terms.n12), v = t.inverse(terms.n2v),
                  w = t.inverse(terms.n2w);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = a.data[i].real();
        out[n + i] = b.data[i].real();
        out[2 * n + i] = v.data[i].real();
        out[3 * n + i] = v.data[i].imag();
        out[4 * n + i] = w.data[i].real();
        out[5 * n + i] = w.data[i].imag();
    }
}

void WaleffeProblem::eval_N(std::span<const double> state, std::span<double> out) {
    const SpecState s = to_spectral(state);
    Terms terms = bilinear(s, s);
    add(terms.n11, forcing_);
    write_terms(terms, out);
}

void WaleffeProblem::eval_dN(std::span<const double> base, std::span<const double> dir, std::span<double> out) {
    const SpecState u = to_spectral(base), d = to_spectral(dir);
    Terms a = bilinear(u, d);
    const Terms b = bilinear(d, u);
    add(a.n11, b.n11);
    add(a.n12, b.n12);
    add(a.n2v, b.n2v);
    add(a.n2w, b.n2w);
    write_terms(a, out);
}

void WaleffeProblem::apply_L(std::span<const double> x, std::span<double> out) {
    const SpecState s = to_spectral(x);
    const double eps = 1.0 / params_.re;
    Terms t;
    t.n11 = laplacian(grid_, s.u0);
    t.n12 = laplacian(grid_, s.om);
    t.n2v = laplacian(grid_, s.v);
    t.n2w = laplacian(grid_, s.w);
    scale(t.n2v, eps);
    scale(t.n2w, eps);
    write_terms(t, out);
}

void WaleffeProblem::solve_shifted(std::span<const BlockScale> scales, std::span<const double> rhs,
                                   std::span<double> out) {
    const SpecState s = to_spectral(rhs);
    const double eps = 1.0 / params_.re;
    Terms t;
    t.n11 = adacont::solve_shifted(grid_, s.u0, scales[0].c);
    t.n12 = adacont::solve_shifted(grid_, s.om, scales[0].c);
    t.n2v = adacont::solve_shifted(grid_, s.v, scales[1].c * eps);
    t.n2w = adacont::solve_shifted(grid_, s.w, scales[1].c * eps);
    write_terms(t, out);
}

void WaleffeProblem::project_null_modes(std::span<double> x) const {
    // The constant is the only Laplacian null mode, present in the cosine fields u₀ and w₁′.
    const auto& t = *transforms_;
    const std::size_t n = grid_.size();
    const Field2D u = t.forward(u0(x)), w = t.forward(w1(x));
    for (std::size_t i = 0; i < n; ++i) {
        x[i] -= u.data[0].real();
        x[4 * n + i] -= w.data[0].real();
        x[5 * n + i] -= w.data[0].imag();
    }
}

Vec WaleffeProblem::laminar_state() const {
    Vec s(layout_.size(), 0.0);
    const std::size_t nz = grid_.nz();
    for (std::size_t j = 0; j < grid_.ny(); ++j)
        for (std::size_t m = 0; m < nz; ++m) s[j * nz + m] = std::sqrt(2.0) * std::sin(kPi * grid_.y(j) / 2.0);
    return s;
}

double WaleffeProblem::n_u(std::span<const double> state) const {
    const std::size_t ny = grid_.ny(), nz = grid_.nz();
    double sum = 0.0;
    for (std::size_t j = 0; j < ny; ++j) {
        const double w = (j == 0 || j + 1 == ny) ? 0.5 : 1.0;
        for (std::size_t m = 0; m < nz; ++m) sum += w * state[j * nz + m] * state[j * nz + m];
    }
    const double dy = 2.0 / static_cast<double>(ny - 1), dz = grid_.lz() / static_cast<double>(nz);
    return sum * dy * dz / (2.0 * grid_.lz());
}

WaleffeProblem::Preliminary WaleffeProblem::preliminary(std::span<const double> state) const {
    const SpecState s = to_spectral(state);
    Field2D om = s.om;
    dealias(grid_, om);
    return {transforms_->inverse(streamfunction(om)), transforms_->inverse(pressure(s, s))};
}

Vec WaleffeProblem::random_state(std::uint64_t seed, double amplitude) const {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d;
    const auto& g = grid_;
    const std::size_t n = g.size(), nz = g.nz();
    auto smooth = [&](Parity p) {
        Field2D f(g, p, Representation::Spectral);
        for (std::size_t k = 0; k < g.ny(); ++k)
            for (std::size_t m = 0; m < nz; ++m) {
                if (!g.retained(k, m) || (p == Parity::Sine && k == 0)) continue;
                const double decay = std::exp(-0.25 * (double(k) + std::abs(double(g.zmode(m)))));
                f.data[k * nz + m] = amplitude * decay * cplx(d(rng), d(rng));
            }
        return transforms_->inverse(f);
    };
    Vec s(layout_.size());
    const Field2D a = smooth(Parity::Cosine), b = smooth(Parity::Sine), v = smooth(Parity::Sine),
                  w = smooth(Parity::Cosine);
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = a.data[i].real();
        s[n + i] = b.data[i].real();
        s[2 * n + i] = v.data[i].real();
        s[3 * n + i] = v.data[i].imag();
        s[4 * n + i] = w.data[i].real();
        s[5 * n + i] = w.data[i].imag();
    }
    return s;
}

}  // namespace adacont
