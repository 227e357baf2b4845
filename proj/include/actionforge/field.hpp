#pragma once

#include "actionforge/diffop.hpp"

#include <array>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace actionforge {

/// Periodic box [0, length)^dim with n points per axis.
struct Grid {
    int dim = 1;
    int n = 256;
    double length = 6.283185307179586;

    Grid() = default;
    Grid(int dim, int n, double length = 6.283185307179586);

    [[nodiscard]] double dx() const { return length / n; }
    [[nodiscard]] std::size_t size() const;
    [[nodiscard]] double cell_volume() const;
    /// Coordinate of flat index `i` (row-major, x slowest).
    [[nodiscard]] std::array<double, 3> point(std::size_t i) const;
    /// Wavevector of flat spectral index `i`; components in [-n/2, n/2) * 2 pi / length.
    [[nodiscard]] std::array<double, 3> wavevector(std::size_t i) const;
    /// Integer mode number along one axis for an FFT index.
    [[nodiscard]] int mode_number(int index) const { return index < n / 2 ? index : index - n; }

    friend bool operator==(const Grid&, const Grid&) = default;
};

enum class FieldTag { physical, spectral };

/// Grid values, either point samples or FFT coefficients. Real fields carry
/// zero imaginary parts in physical space.
struct Field {
    Grid grid;
    std::vector<cplx> values;
    FieldTag tag = FieldTag::physical;

    Field() = default;
    Field(Grid g, FieldTag t = FieldTag::physical);
    Field(Grid g, std::vector<cplx> v, FieldTag t);

    static Field sample(const Grid& g, const std::function<cplx(const std::array<double, 3>&)>& fn);

    [[nodiscard]] std::size_t size() const { return values.size(); }
    /// max |Im| / max |value| in physical space.
    [[nodiscard]] double imaginary_residue() const;

    Field& operator+=(const Field& other);
    Field& operator-=(const Field& other);
    Field& operator*=(cplx c);
    friend Field operator+(Field a, const Field& b) { return a += b; }
    friend Field operator-(Field a, const Field& b) { return a -= b; }
    friend Field operator*(Field a, cplx c) { return a *= c; }
    friend Field operator*(cplx c, Field a) { return a *= c; }
};

/// Forward transform (unnormalized DFT); no-op for spectral input.
Field to_spectral(const Field& f);
/// Inverse transform (scaled by 1/N); no-op for physical input.
Field to_physical(const Field& f);
/// In-place transforms over raw spans of length grid.size().
void fft_forward(const Grid& g, std::span<const cplx> in, std::span<cplx> out);
void fft_inverse(const Grid& g, std::span<const cplx> in, std::span<cplx> out);

/// Per-mode multipliers of a time-free operator: symbol_eval(op, 0, k).
std::vector<cplx> spatial_symbol(const DiffOp& op, const Grid& g);
/// Applies a time-free operator spectrally. The result keeps the tag of `f`.
Field apply_spatial(const DiffOp& op, const Field& f);

/// Zeroes the imaginary part after checking it is at most `rel_tol` of the
/// field magnitude; throws std::domain_error otherwise.
Field truncate_real(const Field& f, double rel_tol = 1e-12);

/// Periodized Gaussian amp * sum over images exp(-|x - c|^2 / (2 sigma^2)), built from its
/// exact Fourier coefficients (spectral tag). Free of sampling round-off at high wavenumbers.
Field periodic_gaussian(const Grid& g, double center, double sigma, double amp = 1.0);

/// Periodic trapezoid rule: cell volume times the sum of the real parts.
double integrate(const Field& f);
double l2_norm(const Field& f);
double l2_distance(const Field& f, const Field& g);

/// 1D CSV with header "x,value" (real part, 17 significant digits).
void write_csv(std::ostream& out, const Field& f);
Field read_csv(std::istream& in, const Grid& g);
/// Little-endian binary: two uint64 (dim, n) then n^dim doubles (real part).
void write_binary(std::ostream& out, const Field& f);
Field read_binary(std::istream& in, double length = 6.283185307179586);

}  // namespace actionforge
