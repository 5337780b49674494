#pragma once

#include "adacont/errors.hpp"

#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

namespace adacont {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;

/// y expansion: Cosine = cosine-I series (Neumann at y = ±1),
/// Sine = sine-I series (Dirichlet at y = ±1).
enum class Parity { Cosine, Sine };
enum class Representation { Physical, Spectral };

inline Parity flip(Parity p) { return p == Parity::Cosine ? Parity::Sine : Parity::Cosine; }
const char* to_string(Parity p);

/// Equispaced collocation on y ∈ [−1, 1] (endpoints included) times a
/// periodic z ∈ [0, L_z). Mode k in y is cos/sin(kπ(y+1)/2); mode index m in
/// z is e^{iβmz} with β = 2π/L_z and m folded to (−n_z/2, n_z/2].
class SpectralGrid {
public:
    explicit SpectralGrid(std::size_t ny = 32, std::size_t nz = 32, double lz = 3.14159265358979323846);

    std::size_t ny() const { return ny_; }
    std::size_t nz() const { return nz_; }
    std::size_t size() const { return ny_ * nz_; }
    double ly() const { return 2.0; }
    double lz() const { return lz_; }
    double beta() const { return beta_; }

    double y(std::size_t j) const;
    double z(std::size_t m) const;
    /// Signed z wavenumber index of storage column m.
    long zmode(std::size_t m) const;
    bool z_nyquist(std::size_t m) const { return nz_ % 2 == 0 && m == nz_ / 2; }
    /// Wavenumbers kπ/2 and βm.
    double ky(std::size_t k) const;
    double kz(std::size_t m) const { return beta_ * static_cast<double>(zmode(m)); }

    /// Highest retained y mode and |z| mode under the 2/3 rule.
    std::size_t ky_keep() const;
    long kz_keep() const;
    bool retained(std::size_t k, std::size_t m) const;

private:
    std::size_t ny_, nz_;
    double lz_, beta_;
};

/// One scalar plane, row-major [j * n_z + m], complex so that both the real
/// mean fields and the complex fluctuations share the machinery.
struct Field2D {
    CVec data;
    Parity parity = Parity::Cosine;
    Representation rep = Representation::Physical;

    Field2D() = default;
    Field2D(const SpectralGrid& g, Parity p, Representation r) : data(g.size()), parity(p), rep(r) {}
};

/// FFTW plans for one grid. Plans are immutable after construction and can be
/// shared; every call works on caller-owned buffers.
class SpectralTransforms {
public:
    explicit SpectralTransforms(const SpectralGrid& grid);
    ~SpectralTransforms();
    SpectralTransforms(const SpectralTransforms&) = delete;
    SpectralTransforms& operator=(const SpectralTransforms&) = delete;

    const SpectralGrid& grid() const { return grid_; }

    Field2D forward(const Field2D& physical) const;
    Field2D inverse(const Field2D& spectral) const;

private:
    struct Plans;
    SpectralGrid grid_;
    std::unique_ptr<Plans> plans_;
};

/// ∂_y^order; odd orders flip the parity. Order ≤ 2.
Field2D derivative_y(const SpectralGrid& g, const Field2D& f, int order = 1);
/// ∂_z^order. Order ≤ 2.
Field2D derivative_z(const SpectralGrid& g, const Field2D& f, int order = 1);
Field2D laplacian(const SpectralGrid& g, const Field2D& f);

/// (σ − ∇²)⁻¹ rhs. For σ = 0 the mean mode of rhs must vanish (relative to
/// the largest coefficient, within `tol`); the output mean is set to zero.
Field2D solve_helmholtz(const SpectralGrid& g, const Field2D& rhs, double sigma, double tol = 1e-10);

/// (I − c∇²)⁻¹ rhs, c ≥ 0.
Field2D solve_shifted(const SpectralGrid& g, const Field2D& rhs, double c);

/// Zero modes at or above 2/3 of Nyquist in either direction.
void dealias(const SpectralGrid& g, Field2D& f);

}  // namespace adacont
