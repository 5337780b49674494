#include "adacont/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

namespace adacont {

namespace {

constexpr double kPi = 3.14159265358979323846;

// The FFTW planner is not reentrant.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

void require(const Field2D& f, const SpectralGrid& g, Representation rep, const char* what) {
    if (f.data.size() != g.size()) throw std::invalid_argument(std::string(what) + ": field size does not match grid");
    if (f.rep != rep) throw std::invalid_argument(std::string(what) + ": wrong representation");
}

}  // namespace

const char* to_string(Parity p) { return p == Parity::Cosine ? "cosine" : "sine"; }

SpectralGrid::SpectralGrid(std::size_t ny, std::size_t nz, double lz) : ny_(ny), nz_(nz), lz_(lz) {
    if (ny < 4 || nz < 2) throw std::invalid_argument("spectral grid needs ny >= 4 and nz >= 2");
    if (!(lz > 0.0)) throw std::invalid_argument("L_z must be > 0");
    beta_ = 2.0 * kPi / lz;
}

double SpectralGrid::y(std::size_t j) const { return -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(ny_ - 1); }

double SpectralGrid::z(std::size_t m) const { return lz_ * static_cast<double>(m) / static_cast<double>(nz_); }

long SpectralGrid::zmode(std::size_t m) const {
    const long mm = static_cast<long>(m);
    const long n = static_cast<long>(nz_);
    return mm <= n / 2 ? mm : mm - n;
}

double SpectralGrid::ky(std::size_t k) const { return 0.5 * kPi * static_cast<double>(k); }

std::size_t SpectralGrid::ky_keep() const {
    // Strictly below 2/3 of the Nyquist index ny − 1.
    const std::size_t nyq = ny_ - 1;
    std::size_t k = (2 * nyq) / 3;
    if (3 * k >= 2 * nyq) --k;
    return k;
}

long SpectralGrid::kz_keep() const {
    const long nyq = static_cast<long>(nz_ / 2);
    long k = (2 * nyq) / 3;
    if (3 * k >= 2 * nyq) --k;
    return k;
}

bool SpectralGrid::retained(std::size_t k, std::size_t m) const {
    return k <= ky_keep() && std::labs(zmode(m)) <= kz_keep() && !z_nyquist(m);
}

// ---------------------------------------------------------------- transforms

struct SpectralTransforms::Plans {
    fftw_plan cos_plan = nullptr;  // REDFT00 over every column, out of place
    fftw_plan sin_plan = nullptr;  // RODFT00 over interior rows, out of place
    fftw_plan z_fwd = nullptr;     // in place along rows
    fftw_plan z_bwd = nullptr;

    ~Plans() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        for (auto p : {cos_plan, sin_plan, z_fwd, z_bwd})
            if (p) fftw_destroy_plan(p);
    }
};

SpectralTransforms::SpectralTransforms(const SpectralGrid& grid) : grid_(grid), plans_(std::make_unique<Plans>()) {
    const int ny = static_cast<int>(grid.ny());
    const int nz = static_cast<int>(grid.nz());
    const int cols = 2 * nz;  // real and imaginary parts are separate columns
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;

    std::lock_guard<std::mutex> lock(planner_mutex());
    auto* a = static_cast<double*>(fftw_malloc(sizeof(double) * grid.size() * 2));
    auto* b = static_cast<double*>(fftw_malloc(sizeof(double) * grid.size() * 2));
    fftw_r2r_kind redft = FFTW_REDFT00, rodft = FFTW_RODFT00;
    int n_cos = ny, n_sin = ny - 2;
    plans_->cos_plan = fftw_plan_many_r2r(1, &n_cos, cols, a, nullptr, cols, 1, b, nullptr, cols, 1, &redft, flags);
    plans_->sin_plan =
        fftw_plan_many_r2r(1, &n_sin, cols, a + cols, nullptr, cols, 1, b + cols, nullptr, cols, 1, &rodft, flags);
    auto* c = reinterpret_cast<fftw_complex*>(a);
    int n_z = nz;
    plans_->z_fwd = fftw_plan_many_dft(1, &n_z, ny, c, nullptr, 1, nz, c, nullptr, 1, nz, FFTW_FORWARD, flags);
    plans_->z_bwd = fftw_plan_many_dft(1, &n_z, ny, c, nullptr, 1, nz, c, nullptr, 1, nz, FFTW_BACKWARD, flags);
    fftw_free(a);
    fftw_free(b);
    if (!plans_->cos_plan || !plans_->sin_plan || !plans_->z_fwd || !plans_->z_bwd) {
        throw std::runtime_error("FFTW plan creation failed");
    }
}

SpectralTransforms::~SpectralTransforms() = default;

Field2D SpectralTransforms::forward(const Field2D& physical) const {
    const auto& g = grid_;
    require(physical, g, Representation::Physical, "forward");
    const std::size_t ny = g.ny(), nz = g.nz(), cols = 2 * nz;

    CVec tmp = physical.data;
    auto* tc = reinterpret_cast<fftw_complex*>(tmp.data());
    fftw_execute_dft(plans_->z_fwd, tc, tc);

    Field2D out(g, physical.parity, Representation::Spectral);
    auto* in = reinterpret_cast<double*>(tmp.data());
    auto* o = reinterpret_cast<double*>(out.data.data());
    const double scale_z = 1.0 / static_cast<double>(nz);
    const double n1 = static_cast<double>(ny - 1);
    if (physical.parity == Parity::Cosine) {
        fftw_execute_r2r(plans_->cos_plan, in, o);
        for (std::size_t k = 0; k < ny; ++k) {
            const double s = scale_z / n1 * ((k == 0 || k == ny - 1) ? 0.5 : 1.0);
            for (std::size_t c = 0; c < cols; ++c) o[k * cols + c] *= s;
        }
    } else {
        fftw_execute_r2r(plans_->sin_plan, in + cols, o + cols);
        const double s = scale_z / n1;
        for (std::size_t k = 1; k + 1 < ny; ++k)
            for (std::size_t c = 0; c < cols; ++c) o[k * cols + c] *= s;
        for (std::size_t c = 0; c < cols; ++c) {
            o[c] = 0.0;
            o[(ny - 1) * cols + c] = 0.0;
        }
    }
    return out;
}

Field2D SpectralTransforms::inverse(const Field2D& spectral) const {
    const auto& g = grid_;
    require(spectral, g, Representation::Spectral, "inverse");
    const std::size_t ny = g.ny(), cols = 2 * g.nz();

    CVec tmp = spectral.data;
    auto* in = reinterpret_cast<double*>(tmp.data());
    Field2D out(g, spectral.parity, Representation::Physical);
    auto* o = reinterpret_cast<double*>(out.data.data());
    if (spectral.parity == Parity::Cosine) {
        for (std::size_t k = 1; k + 1 < ny; ++k)
            for (std::size_t c = 0; c < cols; ++c) in[k * cols + c] *= 0.5;
        fftw_execute_r2r(plans_->cos_plan, in, o);
    } else {
        fftw_execute_r2r(plans_->sin_plan, in + cols, o + cols);
        for (std::size_t k = 1; k + 1 < ny; ++k)
            for (std::size_t c = 0; c < cols; ++c) o[k * cols + c] *= 0.5;
        for (std::size_t c = 0; c < cols; ++c) {
            o[c] = 0.0;
            o[(ny - 1) * cols + c] = 0.0;
        }
    }
    auto* oc = reinterpret_cast<fftw_complex*>(out.data.data());
    fftw_execute_dft(plans_->z_bwd, oc, oc);
    return out;
}

// ---------------------------------------------------------------- operators

Field2D derivative_y(const SpectralGrid& g, const Field2D& f, int order) {
    require(f, g, Representation::Spectral, "derivative_y");
    if (order < 0 || order > 2) throw std::invalid_argument("derivative order must be 0, 1 or 2");
    const std::size_t ny = g.ny(), nz = g.nz();
    if (order == 0) return f;
    Field2D out(g, order == 1 ? flip(f.parity) : f.parity, Representation::Spectral);
    for (std::size_t k = 0; k < ny; ++k) {
        double factor;
        if (order == 2) {
            factor = -g.ky(k) * g.ky(k);
        } else if (k == 0 || k == ny - 1) {
            // Mode 0 has zero slope; the top mode's derivative vanishes on the nodes.
            factor = 0.0;
        } else {
            factor = f.parity == Parity::Cosine ? -g.ky(k) : g.ky(k);
        }
        for (std::size_t m = 0; m < nz; ++m) out.data[k * nz + m] = factor * f.data[k * nz + m];
    }
    if (out.parity == Parity::Sine) {
        for (std::size_t m = 0; m < nz; ++m) {
            out.data[m] = 0.0;
            out.data[(ny - 1) * nz + m] = 0.0;
        }
    }
    return out;
}

Field2D derivative_z(const SpectralGrid& g, const Field2D& f, int order) {
    require(f, g, Representation::Spectral, "derivative_z");
    if (order < 0 || order > 2) throw std::invalid_argument("derivative order must be 0, 1 or 2");
    if (order == 0) return f;
    const std::size_t ny = g.ny(), nz = g.nz();
    Field2D out(g, f.parity, Representation::Spectral);
    for (std::size_t m = 0; m < nz; ++m) {
        const double kz = g.kz(m);
        cplx factor = order == 1 ? cplx(0.0, g.z_nyquist(m) ? 0.0 : kz) : cplx(-kz * kz, 0.0);
        for (std::size_t k = 0; k < ny; ++k) out.data[k * nz + m] = factor * f.data[k * nz + m];
    }
    return out;
}

Field2D laplacian(const SpectralGrid& g, const Field2D& f) {
    require(f, g, Representation::Spectral, "laplacian");
    const std::size_t ny = g.ny(), nz = g.nz();
    Field2D out(g, f.parity, Representation::Spectral);
    for (std::size_t k = 0; k < ny; ++k)
        for (std::size_t m = 0; m < nz; ++m) {
            const double k2 = g.ky(k) * g.ky(k) + g.kz(m) * g.kz(m);
            out.data[k * nz + m] = -k2 * f.data[k * nz + m];
        }
    return out;
}

Field2D solve_helmholtz(const SpectralGrid& g, const Field2D& rhs, double sigma, double tol) {
    require(rhs, g, Representation::Spectral, "solve_helmholtz");
    if (sigma < 0.0) throw std::invalid_argument("helmholtz shift must be >= 0");
    const std::size_t ny = g.ny(), nz = g.nz();
    Field2D out(g, rhs.parity, Representation::Spectral);
    const bool has_null = sigma == 0.0 && rhs.parity == Parity::Cosine;
    if (has_null) {
        double scale = 0.0;
        for (const auto& v : rhs.data) scale = std::max(scale, std::abs(v));
        if (std::abs(rhs.data[0]) > tol * std::max(scale, 1e-300) && std::abs(rhs.data[0]) > 0.0) {
            throw CompatibilityError("Poisson right-hand side has a nonzero mean mode");
        }
    }
    for (std::size_t k = 0; k < ny; ++k)
        for (std::size_t m = 0; m < nz; ++m) {
            const double d = sigma + g.ky(k) * g.ky(k) + g.kz(m) * g.kz(m);
            out.data[k * nz + m] = d == 0.0 ? cplx(0.0) : rhs.data[k * nz + m] / d;
        }
    if (rhs.parity == Parity::Sine) {
        for (std::size_t m = 0; m < nz; ++m) {
            out.data[m] = 0.0;
            out.data[(ny - 1) * nz + m] = 0.0;
        }
    }
    return out;
}

Field2D solve_shifted(const SpectralGrid& g, const Field2D& rhs, double c) {
    require(rhs, g, Representation::Spectral, "solve_shifted");
    if (c < 0.0) throw std::invalid_argument("shift constant must be >= 0");
    const std::size_t ny = g.ny(), nz = g.nz();
    Field2D out(g, rhs.parity, Representation::Spectral);
    for (std::size_t k = 0; k < ny; ++k)
        for (std::size_t m = 0; m < nz; ++m) {
            const double k2 = g.ky(k) * g.ky(k) + g.kz(m) * g.kz(m);
            out.data[k * nz + m] = rhs.data[k * nz + m] / (1.0 + c * k2);
        }
    return out;
}

void dealias(const SpectralGrid& g, Field2D& f) {
    require(f, g, Representation::Spectral, "dealias");
    const std::size_t ny = g.ny(), nz = g.nz();
    for (std::size_t k = 0; k < ny; ++k)
        for (std::size_t m = 0; m < nz; ++m)
            if (!g.retained(k, m)) f.data[k * nz + m] = 0.0;
}

}  // namespace adacont
