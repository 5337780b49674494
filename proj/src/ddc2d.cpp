#include "adacont/ddc2d.hpp"

#include "adacont/errors.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace adacont {

namespace {

constexpr double kPi = 3.14159265358979323846;

using Solver = Eigen::SimplicialLDLT<DdcProblem::SpMat>;
using Triplets = std::vector<Eigen::Triplet<double>>;

// Index arithmetic and ghost rules of the staggered grid. Signed indices so
// that ghosts one step outside the walls can be addressed directly.
struct Mac {
    long nx, nz;
    double hx, hz;

    long cell(long i, long j) const { return i * nz + j; }
    long uid(long i, long j) const { return (i - 1) * nz + j; }  // interior x-face i ∈ [1, nx)
    long wid(long i, long j) const { return i * (nz - 1) + (j - 1); }  // interior z-face j ∈ [1, nz)

    // No-slip: zero normal velocity on the wall, mirrored tangential ghosts.
    double U(std::span<const double> u, long i, long j) const {
        if (i <= 0 || i >= nx) return 0.0;
        if (j < 0) return -u[uid(i, 0)];
        if (j >= nz) return -u[uid(i, nz - 1)];
        return u[uid(i, j)];
    }
    double W(std::span<const double> w, long i, long j) const {
        if (j <= 0 || j >= nz) return 0.0;
        if (i < 0) return -w[wid(0, j)];
        if (i >= nx) return -w[wid(nx - 1, j)];
        return w[wid(i, j)];
    }
    // Scalars: insulating at x walls, value 0 at z = 0 and `top` at z = 1.
    double S(std::span<const double> s, long i, long j, double top) const {
        i = std::clamp(i, 0L, nx - 1);
        if (j < 0) return -s[cell(i, 0)];
        if (j >= nz) return 2.0 * top - s[cell(i, nz - 1)];
        return s[cell(i, j)];
    }
    // Vorticity ∂x w − ∂z u at node (i, j), i ∈ [0, nx], j ∈ [0, nz].
    double eta(std::span<const double> u, std::span<const double> w, long i, long j) const {
        return (W(w, i, j) - W(w, i - 1, j)) / hx - (U(u, i, j) - U(u, i, j - 1)) / hz;
    }
};

struct Parts {
    std::span<const double> u, w, t, c;
};
struct MutParts {
    std::span<double> u, w, t, c;
};

void add(Triplets& tr, long r, long c, double v) { tr.emplace_back(static_cast<int>(r), static_cast<int>(c), v); }

DdcProblem::SpMat build(long n, const Triplets& tr) {
    DdcProblem::SpMat m(n, n);
    m.setFromTriplets(tr.begin(), tr.end());
    return m;
}

DdcProblem::SpMat laplacian_u(const Mac& g) {
    Triplets tr;
    const double ax = 1.0 / (g.hx * g.hx), az = 1.0 / (g.hz * g.hz);
    for (long i = 1; i < g.nx; ++i)
        for (long j = 0; j < g.nz; ++j) {
            const long r = g.uid(i, j);
            add(tr, r, r, -2.0 * ax - 2.0 * az);
            if (i > 1) add(tr, r, g.uid(i - 1, j), ax);
            if (i < g.nx - 1) add(tr, r, g.uid(i + 1, j), ax);
            if (j > 0) add(tr, r, g.uid(i, j - 1), az);
            else add(tr, r, r, -az);
            if (j < g.nz - 1) add(tr, r, g.uid(i, j + 1), az);
            else add(tr, r, r, -az);
        }
    return build((g.nx - 1) * g.nz, tr);
}

DdcProblem::SpMat laplacian_w(const Mac& g) {
    Triplets tr;
    const double ax = 1.0 / (g.hx * g.hx), az = 1.0 / (g.hz * g.hz);
    for (long i = 0; i < g.nx; ++i)
        for (long j = 1; j < g.nz; ++j) {
            const long r = g.wid(i, j);
            add(tr, r, r, -2.0 * ax - 2.0 * az);
            if (j > 1) add(tr, r, g.wid(i, j - 1), az);
            if (j < g.nz - 1) add(tr, r, g.wid(i, j + 1), az);
            if (i > 0) add(tr, r, g.wid(i - 1, j), ax);
            else add(tr, r, r, -ax);
            if (i < g.nx - 1) add(tr, r, g.wid(i + 1, j), ax);
            else add(tr, r, r, -ax);
        }
    return build(g.nx * (g.nz - 1), tr);
}

// Cell Laplacian; `dirichlet_z` selects zero-value ghosts at z walls, else
// every wall is Neumann (the pressure operator).
DdcProblem::SpMat laplacian_cells(const Mac& g, bool dirichlet_z) {
    Triplets tr;
    const double ax = 1.0 / (g.hx * g.hx), az = 1.0 / (g.hz * g.hz);
    for (long i = 0; i < g.nx; ++i)
        for (long j = 0; j < g.nz; ++j) {
            const long r = g.cell(i, j);
            double diag = 0.0;
            if (i > 0) add(tr, r, g.cell(i - 1, j), ax), diag -= ax;
            if (i < g.nx - 1) add(tr, r, g.cell(i + 1, j), ax), diag -= ax;
            if (j > 0) add(tr, r, g.cell(i, j - 1), az), diag -= az;
            else if (dirichlet_z) diag -= 2.0 * az;
            if (j < g.nz - 1) add(tr, r, g.cell(i, j + 1), az), diag -= az;
            else if (dirichlet_z) diag -= 2.0 * az;
            add(tr, r, r, diag);
        }
    return build(g.nx * g.nz, tr);
}

void advect_scalar(const Mac& g, std::span<const double> u, std::span<const double> w, std::span<const double> s,
                   double top, std::span<double> out) {
    for (long i = 0; i < g.nx; ++i)
        for (long j = 0; j < g.nz; ++j) {
            const double uc = 0.5 * (g.U(u, i, j) + g.U(u, i + 1, j));
            const double wc = 0.5 * (g.W(w, i, j) + g.W(w, i, j + 1));
            out[g.cell(i, j)] -= uc * (g.S(s, i + 1, j, top) - g.S(s, i - 1, j, top)) / (2.0 * g.hx) +
                                 wc * (g.S(s, i, j + 1, top) - g.S(s, i, j - 1, top)) / (2.0 * g.hz);
        }
}

// out −= (a·∇)b on interior faces.
void advect_velocity(const Mac& g, std::span<const double> au, std::span<const double> aw, std::span<const double> bu,
                     std::span<const double> bw, std::span<double> ou, std::span<double> ow) {
    for (long i = 1; i < g.nx; ++i)
        for (long j = 0; j < g.nz; ++j) {
            const double a = g.U(au, i, j);
            const double abar = 0.25 * (g.W(aw, i - 1, j) + g.W(aw, i - 1, j + 1) + g.W(aw, i, j) + g.W(aw, i, j + 1));
            ou[g.uid(i, j)] -= a * (g.U(bu, i + 1, j) - g.U(bu, i - 1, j)) / (2.0 * g.hx) +
                               abar * (g.U(bu, i, j + 1) - g.U(bu, i, j - 1)) / (2.0 * g.hz);
        }
    for (long i = 0; i < g.nx; ++i)
        for (long j = 1; j < g.nz; ++j) {
            const double abar = 0.25 * (g.U(au, i, j - 1) + g.U(au, i + 1, j - 1) + g.U(au, i, j) + g.U(au, i + 1, j));
            const double a = g.W(aw, i, j);
            ow[g.wid(i, j)] -= abar * (g.W(bw, i + 1, j) - g.W(bw, i - 1, j)) / (2.0 * g.hx) +
                               a * (g.W(bw, i, j + 1) - g.W(bw, i, j - 1)) / (2.0 * g.hz);
        }
}

void add_buoyancy(const Mac& g, double coef, std::span<const double> t, std::span<const double> c,
                  std::span<double> ou) {
    for (long i = 1; i < g.nx; ++i)
        for (long j = 0; j < g.nz; ++j) {
            const long a = g.cell(i - 1, j), b = g.cell(i, j);
            ou[g.uid(i, j)] += coef * 0.5 * ((t[a] - c[a]) + (t[b] - c[b]));
        }
}

// ∇×∇×u = (∂z η, −∂x η) on all faces, walls included.
void curl_curl_full(const Mac& g, std::span<const double> u, std::span<const double> w, Vec& ku, Vec& kw) {
    ku.assign((g.nx + 1) * g.nz, 0.0);
    kw.assign(g.nx * (g.nz + 1), 0.0);
    for (long i = 0; i <= g.nx; ++i)
        for (long j = 0; j < g.nz; ++j) ku[i * g.nz + j] = (g.eta(u, w, i, j + 1) - g.eta(u, w, i, j)) / g.hz;
    for (long i = 0; i < g.nx; ++i)
        for (long j = 0; j <= g.nz; ++j) kw[i * (g.nz + 1) + j] = -(g.eta(u, w, i + 1, j) - g.eta(u, w, i, j)) / g.hx;
}

// Cell divergence of full face arrays.
Vec divergence_full(const Mac& g, std::span<const double> fu, std::span<const double> fw) {
    Vec d(g.nx * g.nz);
    for (long i = 0; i < g.nx; ++i)
        for (long j = 0; j < g.nz; ++j)
            d[g.cell(i, j)] = (fu[(i + 1) * g.nz + j] - fu[i * g.nz + j]) / g.hx +
                              (fw[i * (g.nz + 1) + j + 1] - fw[i * (g.nz + 1) + j]) / g.hz;
    return d;
}

// Interior face values embedded into full face arrays (walls zero).
void embed(const Mac& g, std::span<const double> u, std::span<const double> w, Vec& fu, Vec& fw) {
    fu.assign((g.nx + 1) * g.nz, 0.0);
    fw.assign(g.nx * (g.nz + 1), 0.0);
    for (long i = 1; i < g.nx; ++i)
        for (long j = 0; j < g.nz; ++j) fu[i * g.nz + j] = u[g.uid(i, j)];
    for (long i = 0; i < g.nx; ++i)
        for (long j = 1; j < g.nz; ++j) fw[i * (g.nz + 1) + j] = w[g.wid(i, j)];
}

Mac mac_of(const DdcProblem& p) {
    return {static_cast<long>(p.params().nx), static_cast<long>(p.params().nz), p.hx(), p.hz()};
}

}  // namespace

DdcProblem::DdcProblem(DdcParams params) : params_(params) {
    if (params_.nx < 3 || params_.nz < 3) throw std::invalid_argument("ddc2d grid needs at least 3 cells per side");
    if (!(params_.pr > 0.0) || !(params_.tau > 0.0) || !(params_.lx > 0.0)) {
        throw std::invalid_argument("ddc2d: Pr, tau and Lx must be > 0");
    }
    hx_ = params_.lx / static_cast<double>(params_.nx);
    hz_ = 1.0 / static_cast<double>(params_.nz);
    const std::size_t nx = params_.nx, nz = params_.nz;
    layout_.add_block("velocity", {{"u", nx - 1, nz}, {"w", nx, nz - 1}});
    layout_.add_block("temperature", {{"T", nx, nz}});
    layout_.add_block("concentration", {{"C", nx, nz}});

    const Mac g = mac_of(*this);
    lap_[0] = std::make_shared<const SpMat>(laplacian_u(g));
    lap_[1] = std::make_shared<const SpMat>(laplacian_w(g));
    lap_[2] = std::make_shared<const SpMat>(laplacian_cells(g, true));

    // −A + e₀e₀ᵀ is positive definite and reproduces A p = b with p₀ = 0 for compatible b.
    SpMat m = -laplacian_cells(g, false);
    m.coeffRef(0, 0) += 1.0;
    auto solver = std::make_shared<Solver>(m);
    if (solver->info() != Eigen::Success) throw std::runtime_error("ddc2d: pressure factorization failed");
    pressure_ = solver;
    pressure_matrix_ = std::make_shared<const SpMat>(std::move(m));
}

std::map<std::string, double> DdcProblem::parameters() const {
    return {{"Ra", params_.ra}, {"Pr", params_.pr}, {"tau", params_.tau}, {"Lx", params_.lx}};
}

Vec DdcProblem::solve_pressure(Vec rhs) {
    double sum = 0.0, mag = 0.0;
    for (double v : rhs) {
        sum += v;
        mag += std::abs(v);
    }
    const double defect = mag > 0.0 ? std::abs(sum) / mag : 0.0;
    compat_defect_ = std::max(compat_defect_, defect);
    if (defect > 1e-8) throw CompatibilityError("pressure Poisson right-hand side is incompatible (defect " +
                                                std::to_string(defect) + ")");
    Eigen::Map<Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
    // Spread the round-off defect evenly instead of letting the pinned cell absorb it.
    b.array() -= sum / static_cast<double>(rhs.size());
    Eigen::VectorXd p = pressure_->solve(-b);
    // One refinement sweep: the Neumann operator is ill-conditioned enough
    // that the raw solve leaves a visible divergence for large Δt.
    p += pressure_->solve(-b - (*pressure_matrix_) * p);
    p.array() -= p.mean();
    return Vec(p.data(), p.data() + p.size());
}

void DdcProblem::project_momentum(std::span<const double> ne_u, std::span<const double> ne_w,
                                  std::span<const double> u, std::span<const double> w, std::span<double> out_u,
                                  std::span<double> out_w) {
    const Mac g = mac_of(*this);
    const double pr = params_.pr;
    Vec ku, kw, fu, fw;
    curl_curl_full(g, u, w, ku, kw);
    embed(g, ne_u, ne_w, fu, fw);
    // With the datum (N_e − Pr∇×∇×u)·n on the walls the wall-normal part of
    // N_e cancels, leaving homogeneous Neumann data for the interior faces of
    // N_e − Pr∇×∇×u.
    for (std::size_t k = 0; k < fu.size(); ++k) fu[k] -= pr * ku[k];
    for (std::size_t k = 0; k < fw.size(); ++k) fw[k] -= pr * kw[k];
    for (long j = 0; j < g.nz; ++j) fu[j] = fu[g.nx * g.nz + j] = 0.0;
    for (long i = 0; i < g.nx; ++i) fw[i * (g.nz + 1)] = fw[i * (g.nz + 1) + g.nz] = 0.0;
    const Vec p = solve_pressure(divergence_full(g, fu, fw));
    for (long i = 1; i < g.nx; ++i)
        for (long j = 0; j < g.nz; ++j)
            out_u[g.uid(i, j)] = ne_u[g.uid(i, j)] - (p[g.cell(i, j)] - p[g.cell(i - 1, j)]) / g.hx;
    for (long i = 0; i < g.nx; ++i)
        for (long j = 1; j < g.nz; ++j)
            out_w[g.wid(i, j)] = ne_w[g.wid(i, j)] - (p[g.cell(i, j)] - p[g.cell(i, j - 1)]) / g.hz;
}

namespace {

Parts split_state(const BlockLayout& l, std::span<const double> s) {
    return {s.subspan(l.field_offset("u"), l.field("u").size()), s.subspan(l.field_offset("w"), l.field("w").size()),
            s.subspan(l.field_offset("T"), l.field("T").size()), s.subspan(l.field_offset("C"), l.field("C").size())};
}
MutParts split_state(const BlockLayout& l, std::span<double> s) {
    return {s.subspan(l.field_offset("u"), l.field("u").size()), s.subspan(l.field_offset("w"), l.field("w").size()),
            s.subspan(l.field_offset("T"), l.field("T").size()), s.subspan(l.field_offset("C"), l.field("C").size())};
}

}  // namespace

void DdcProblem::eval_N(std::span<const double> state, std::span<double> out) {
    if (state.size() != size() || out.size() != size()) throw std::invalid_argument("ddc2d: state has the wrong size");
    const Mac g = mac_of(*this);
    const Parts s = split_state(layout_, state);
    const MutParts o = split_state(layout_, out);

    std::fill(o.t.begin(), o.t.end(), 0.0);
    std::fill(o.c.begin(), o.c.end(), 0.0);
    advect_scalar(g, s.u, s.w, s.t, 1.0, o.t);
    advect_scalar(g, s.u, s.w, s.c, 1.0, o.c);
    // Affine part of the Laplacian from the wall value 1 at z = 1.
    const double wall = 2.0 / (g.hz * g.hz);
    for (long i = 0; i < g.nx; ++i) {
        o.t[g.cell(i, g.nz - 1)] += wall;
        o.c[g.cell(i, g.nz - 1)] += params_.tau * wall;
    }

    Vec ne_u(n_u(), 0.0), ne_w(n_w(), 0.0);
    advect_velocity(g, s.u, s.w, s.u, s.w, ne_u, ne_w);
    add_buoyancy(g, params_.pr * params_.ra, s.t, s.c, ne_u);
    project_momentum(ne_u, ne_w, s.u, s.w, o.u, o.w);
}

void DdcProblem::eval_dN(std::span<const double> base, std::span<const double> dir, std::span<double> out) {
    if (base.size() != size() || dir.size() != size() || out.size() != size()) {
        throw std::invalid_argument("ddc2d: state has the wrong size");
    }
    const Mac g = mac_of(*this);
    const Parts b = split_state(layout_, base), d = split_state(layout_, dir);
    const MutParts o = split_state(layout_, out);

    std::fill(o.t.begin(), o.t.end(), 0.0);
    std::fill(o.c.begin(), o.c.end(), 0.0);
    advect_scalar(g, d.u, d.w, b.t, 1.0, o.t);
    advect_scalar(g, b.u, b.w, d.t, 0.0, o.t);
    advect_scalar(g, d.u, d.w, b.c, 1.0, o.c);
    advect_scalar(g, b.u, b.w, d.c, 0.0, o.c);

    Vec ne_u(n_u(), 0.0), ne_w(n_w(), 0.0);
    advect_velocity(g, d.u, d.w, b.u, b.w, ne_u, ne_w);
    advect_velocity(g, b.u, b.w, d.u, d.w, ne_u, ne_w);
    add_buoyancy(g, params_.pr * params_.ra, d.t, d.c, ne_u);
    project_momentum(ne_u, ne_w, d.u, d.w, o.u, o.w);
}

void DdcProblem::apply_L(std::span<const double> x, std::span<double> out) {
    const Parts s = split_state(layout_, x);
    const MutParts o = split_state(layout_, out);
    auto apply = [](const SpMat& m, std::span<const double> in, std::span<double> res, double coef) {
        Eigen::Map<const Eigen::VectorXd> v(in.data(), static_cast<Eigen::Index>(in.size()));
        Eigen::Map<Eigen::VectorXd> r(res.data(), static_cast<Eigen::Index>(res.size()));
        r.noalias() = coef * (m * v);
    };
    apply(*lap_[0], s.u, o.u, params_.pr);
    apply(*lap_[1], s.w, o.w, params_.pr);
    apply(*lap_[2], s.t, o.t, 1.0);
    apply(*lap_[2], s.c, o.c, params_.tau);
}

const Eigen::SimplicialLDLT<DdcProblem::SpMat>& DdcProblem::shifted_solver(int kind, double a) {
    const auto key = std::make_pair(kind, a);
    if (auto it = shifted_.find(key); it != shifted_.end()) return *it->second;
    if (shifted_.size() >= 24) shifted_.clear();
    SpMat m = -a * (*lap_[kind]);
    for (Eigen::Index k = 0; k < m.rows(); ++k) m.coeffRef(k, k) += 1.0;
    auto solver = std::make_shared<Solver>(m);
    if (solver->info() != Eigen::Success) throw std::runtime_error("ddc2d: shifted factorization failed");
    return *(shifted_[key] = solver);
}

void DdcProblem::solve_shifted(std::span<const BlockScale> scales, std::span<const double> rhs,
                               std::span<double> out) {
    if (scales.size() != 3) throw std::invalid_argument("ddc2d expects three block scales");
    const Parts s = split_state(layout_, rhs);
    const MutParts o = split_state(layout_, out);
    auto solve = [&](int kind, double a, std::span<const double> in, std::span<double> res) {
        Eigen::Map<const Eigen::VectorXd> v(in.data(), static_cast<Eigen::Index>(in.size()));
        Eigen::Map<Eigen::VectorXd> r(res.data(), static_cast<Eigen::Index>(res.size()));
        r = shifted_solver(kind, a).solve(v);
    };
    solve(0, scales[0].c * params_.pr, s.u, o.u);
    solve(1, scales[0].c * params_.pr, s.w, o.w);
    solve(2, scales[1].c, s.t, o.t);
    solve(2, scales[2].c * params_.tau, s.c, o.c);
}

Vec DdcProblem::conduction_state() const {
    Vec s(size(), 0.0);
    const Mac g = mac_of(*this);
    const MutParts o = split_state(layout_, std::span<double>(s));
    for (long i = 0; i < g.nx; ++i)
        for (long j = 0; j < g.nz; ++j) o.t[g.cell(i, j)] = o.c[g.cell(i, j)] = (static_cast<double>(j) + 0.5) * g.hz;
    return s;
}

double DdcProblem::kinetic_energy(std::span<const double> state) const {
    const Mac g = mac_of(*this);
    const Parts s = split_state(layout_, state);
    double sum = 0.0;
    for (long i = 0; i < g.nx; ++i)
        for (long j = 0; j < g.nz; ++j) {
            const double uc = 0.5 * (g.U(s.u, i, j) + g.U(s.u, i + 1, j));
            const double wc = 0.5 * (g.W(s.w, i, j) + g.W(s.w, i, j + 1));
            sum += uc * uc + wc * wc;
        }
    return 0.5 * sum / static_cast<double>(n_cells());
}

namespace {

// Velocity from a node streamfunction ψ (zero on the walls): u = ∂zψ, w = −∂xψ.
void velocity_from_streamfunction(const Mac& g, const std::vector<double>& psi, MutParts o) {
    auto P = [&](long i, long j) { return psi[i * (g.nz + 1) + j]; };
    for (long i = 1; i < g.nx; ++i)
        for (long j = 0; j < g.nz; ++j) o.u[g.uid(i, j)] = (P(i, j + 1) - P(i, j)) / g.hz;
    for (long i = 0; i < g.nx; ++i)
        for (long j = 1; j < g.nz; ++j) o.w[g.wid(i, j)] = -(P(i + 1, j) - P(i, j)) / g.hx;
}

}  // namespace

Vec DdcProblem::random_state(std::uint64_t seed, double amplitude) const {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    const Mac g = mac_of(*this);
    Vec s = conduction_state();
    const MutParts o = split_state(layout_, std::span<double>(s));

    constexpr int modes = 4;
    double a[modes][modes], bt[modes][modes], bc[modes][modes];
    for (int p = 0; p < modes; ++p)
        for (int q = 0; q < modes; ++q) {
            const double decay = amplitude / static_cast<double>((p + 1) * (q + 1));
            a[p][q] = decay * nd(rng);
            bt[p][q] = 0.1 * decay * nd(rng);
            bc[p][q] = 0.1 * decay * nd(rng);
        }
    std::vector<double> psi((g.nx + 1) * (g.nz + 1), 0.0);
    for (long i = 0; i <= g.nx; ++i)
        for (long j = 0; j <= g.nz; ++j) {
            const double x = static_cast<double>(i) / static_cast<double>(g.nx), z = static_cast<double>(j) * g.hz;
            double v = 0.0;
            for (int p = 0; p < modes; ++p)
                for (int q = 0; q < modes; ++q) v += a[p][q] * std::sin((p + 1) * kPi * x) * std::sin((q + 1) * kPi * z);
            psi[i * (g.nz + 1) + j] = v;
        }
    velocity_from_streamfunction(g, psi, o);
    for (long i = 0; i < g.nx; ++i)
        for (long j = 0; j < g.nz; ++j) {
            const double x = (static_cast<double>(i) + 0.5) / static_cast<double>(g.nx), z = (static_cast<double>(j) + 0.5) * g.hz;
            for (int p = 0; p < modes; ++p)
                for (int q = 0; q < modes; ++q) {
                    const double m = std::cos(p * kPi * x) * std::sin((q + 1) * kPi * z);
                    o.t[g.cell(i, j)] += bt[p][q] * m;
                    o.c[g.cell(i, j)] += bc[p][q] * m;
                }
        }
    return s;
}

Vec DdcProblem::perturbed_conduction(double amplitude) const {
    const Mac g = mac_of(*this);
    Vec s = conduction_state();
    std::vector<double> psi((g.nx + 1) * (g.nz + 1), 0.0);
    for (long i = 0; i <= g.nx; ++i)
        for (long j = 0; j <= g.nz; ++j)
            psi[i * (g.nz + 1) + j] = amplitude * std::sin(kPi * static_cast<double>(i) / static_cast<double>(g.nx)) *
                                      std::sin(kPi * static_cast<double>(j) * g.hz);
    velocity_from_streamfunction(g, psi, split_state(layout_, std::span<double>(s)));
    return s;
}

Vec DdcProblem::divergence(std::span<const double> state) const {
    const Mac g = mac_of(*this);
    const Parts s = split_state(layout_, state);
    Vec fu, fw;
    embed(g, s.u, s.w, fu, fw);
    return divergence_full(g, fu, fw);
}

Vec DdcProblem::divergence(const FaceVelocity& v) const { return divergence_full(mac_of(*this), v.u, v.w); }

DdcProblem::FaceVelocity DdcProblem::pressure_stage(std::span<const double> state, double delta_t) {
    if (!(delta_t > 0.0)) throw std::invalid_argument("delta_t must be > 0");
    const Mac g = mac_of(*this);
    const Parts s = split_state(layout_, state);
    const double pr = params_.pr;

    // Explicit stage on every face; at x walls only buoyancy survives.
    Vec ne_u(n_u(), 0.0), ne_w(n_w(), 0.0);
    advect_velocity(g, s.u, s.w, s.u, s.w, ne_u, ne_w);
    add_buoyancy(g, pr * params_.ra, s.t, s.c, ne_u);
    Vec nu, nw, uf, wf;
    embed(g, ne_u, ne_w, nu, nw);
    embed(g, s.u, s.w, uf, wf);
    for (long j = 0; j < g.nz; ++j) {
        nu[j] = pr * params_.ra * (s.t[g.cell(0, j)] - s.c[g.cell(0, j)]);
        nu[g.nx * g.nz + j] = pr * params_.ra * (s.t[g.cell(g.nx - 1, j)] - s.c[g.cell(g.nx - 1, j)]);
    }
    FaceVelocity hat{uf, wf};
    for (std::size_t k = 0; k < hat.u.size(); ++k) hat.u[k] += delta_t * nu[k];
    for (std::size_t k = 0; k < hat.w.size(); ++k) hat.w[k] += delta_t * nw[k];

    // Neumann datum g = (N_e − Pr∇×∇×u)·n on wall faces.
    Vec ku, kw;
    curl_curl_full(g, s.u, s.w, ku, kw);
    Vec gu((g.nx + 1) * g.nz, 0.0), gw(g.nx * (g.nz + 1), 0.0);
    for (long j = 0; j < g.nz; ++j)
        for (long i : {0L, g.nx}) gu[i * g.nz + j] = nu[i * g.nz + j] - pr * ku[i * g.nz + j];
    for (long i = 0; i < g.nx; ++i)
        for (long j : {0L, g.nz}) gw[i * (g.nz + 1) + j] = nw[i * (g.nz + 1) + j] - pr * kw[i * (g.nz + 1) + j];

    Vec rhs = divergence_full(g, hat.u, hat.w), wall = divergence_full(g, gu, gw);
    for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] = rhs[k] / delta_t - wall[k];
    const Vec p = solve_pressure(std::move(rhs));

    FaceVelocity out = hat;
    for (long i = 1; i < g.nx; ++i)
        for (long j = 0; j < g.nz; ++j) out.u[i * g.nz + j] -= delta_t * (p[g.cell(i, j)] - p[g.cell(i - 1, j)]) / g.hx;
    for (long i = 0; i < g.nx; ++i)
        for (long j = 1; j < g.nz; ++j)
            out.w[i * (g.nz + 1) + j] -= delta_t * (p[g.cell(i, j)] - p[g.cell(i, j - 1)]) / g.hz;
    for (std::size_t k = 0; k < out.u.size(); ++k) out.u[k] -= delta_t * gu[k];
    for (std::size_t k = 0; k < out.w.size(); ++k) out.w[k] -= delta_t * gw[k];
    return out;
}

Vec DdcProblem::integrate(std::span<const double> state, double delta_t, int steps) {
    const auto scales = resolve(PreconditionerSpec::uniform(layout_, delta_t));
    Vec cur(state.begin(), state.end()), next(size());
    for (int n = 0; n < steps; ++n) {
        step(scales, cur, next);
        cur.swap(next);
    }
    return cur;
}

}  // namespace adacont
