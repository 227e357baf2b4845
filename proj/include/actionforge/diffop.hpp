#pragma once

#include "actionforge/rational.hpp"

#include <array>
#include <compare>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace actionforge {

/// Derivative multi-index (time order, then the three spatial orders).
struct MultiIndex {
    std::array<int, 4> alpha{0, 0, 0, 0};

    [[nodiscard]] int time_order() const { return alpha[0]; }
    [[nodiscard]] int spatial_order() const { return alpha[1] + alpha[2] + alpha[3]; }
    [[nodiscard]] int total() const { return time_order() + spatial_order(); }
    [[nodiscard]] bool divides(const MultiIndex& other) const;

    friend MultiIndex operator+(const MultiIndex& a, const MultiIndex& b);
    friend MultiIndex operator-(const MultiIndex& a, const MultiIndex& b);
    friend auto operator<=>(const MultiIndex&, const MultiIndex&) = default;
    friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
};

using ParamMap = std::map<std::string, Rational, std::less<>>;

/// Constant-coefficient linear differential operator in (d_t, d_x, d_y, d_z),
/// stored as a polynomial with exact Gaussian-rational coefficients. The
/// term map never holds a zero coefficient; the map order is lexicographic
/// with the time order most significant, so the leading term is the last one.
class DiffOp {
public:
    using Terms = std::map<MultiIndex, QComplex>;

    explicit DiffOp(int dim = 1);
    DiffOp(int dim, Terms terms);

    static DiffOp zero(int dim) { return DiffOp(dim); }
    static DiffOp identity(int dim) { return scalar(dim, Rational(1)); }
    static DiffOp scalar(int dim, const QComplex& c);
    static DiffOp monomial(int dim, const MultiIndex& index, const QComplex& c = Rational(1));
    static DiffOp dt(int dim, int power = 1);
    /// Spatial derivative along `axis` (1 = x, 2 = y, 3 = z).
    static DiffOp d(int dim, int axis, int power = 1);
    static DiffOp laplacian(int dim);

    [[nodiscard]] int dim() const { return dim_; }
    [[nodiscard]] const Terms& terms() const { return terms_; }
    [[nodiscard]] bool is_zero() const { return terms_.empty(); }
    [[nodiscard]] bool is_real() const;
    [[nodiscard]] bool is_time_free() const { return time_order() == 0; }
    /// Highest power of d_t with a non-zero coefficient (0 for the zero operator).
    [[nodiscard]] int time_order() const;
    [[nodiscard]] int total_order() const;
    [[nodiscard]] QComplex coefficient(const MultiIndex& index) const;
    /// Sum of the terms whose time order equals `m`, with the d_t^m factor removed.
    [[nodiscard]] DiffOp time_slice(int m) const;

    DiffOp& operator+=(const DiffOp& other);
    DiffOp& operator-=(const DiffOp& other);
    DiffOp& operator*=(const QComplex& c);

    friend DiffOp operator+(DiffOp a, const DiffOp& b) { return a += b; }
    friend DiffOp operator-(DiffOp a, const DiffOp& b) { return a -= b; }
    friend DiffOp operator-(DiffOp a) { return a *= QComplex(Rational(-1)); }
    friend DiffOp operator*(DiffOp a, const QComplex& c) { return a *= c; }
    friend DiffOp operator*(const QComplex& c, DiffOp a) { return a *= c; }
    friend DiffOp operator*(const DiffOp& a, const DiffOp& b);
    friend bool operator==(const DiffOp& a, const DiffOp& b) {
        return a.dim_ == b.dim_ && a.terms_ == b.terms_;
    }

private:
    void add_term(const MultiIndex& index, const QComplex& c);

    int dim_;
    Terms terms_;
};

DiffOp op_add(const DiffOp& a, const DiffOp& b);
DiffOp op_mul(const DiffOp& a, const DiffOp& b);
DiffOp power(const DiffOp& a, int exponent);

/// Formal space-time adjoint: coefficients conjugated and scaled by (-1)^|alpha|.
DiffOp adjoint(const DiffOp& a);
/// Flips the sign of every odd time-derivative term.
DiffOp time_reverse(const DiffOp& a);
/// adjoint(a) * a.
DiffOp normal_op(const DiffOp& a);
/// Exact polynomial division. Returns q with q * d == n, or nullopt when d
/// does not divide n. Throws std::invalid_argument for a zero divisor.
std::optional<DiffOp> exact_divide(const DiffOp& n, const DiffOp& d);

/// Fourier symbol with d_t -> s and d_{x_j} -> i k_j.
cplx symbol_eval(const DiffOp& a, cplx s, std::span<const double> k);
/// Exact symbol at a Gaussian-rational point s and rational wavenumbers k.
QComplex symbol_eval(const DiffOp& a, const QComplex& s, std::span<const Rational> k);

/// Parses the operator literal syntax, e.g. "dt^2 + 1/2 dt - lap" or
/// "tau0 dt^3 + dt^2 - (1 + tau1 dt) lap". Identifiers: dt dx dy dz lap id i
/// plus any name in `params`. Juxtaposition multiplies.
DiffOp parse_diffop(std::string_view text, int dim, const ParamMap& params = {});
/// Canonical text; parse_diffop(to_string(a), a.dim()) == a.
std::string to_string(const DiffOp& a);

/// Kernel scale * t^(alpha-1) / Gamma(alpha) of d_t^{-alpha} delta; zero for t <= 0.
struct FracKernel {
    Rational alpha{1, 2};
    double scale = 1.0;

    [[nodiscard]] double operator()(double t) const;
    /// m-th time derivative for t > 0: scale * t^(alpha-1-m) / Gamma(alpha-m).
    [[nodiscard]] double derivative(int m, double t) const;
};

/// t^(alpha-1)/Gamma(alpha) for t > 0, zero otherwise. alpha must be positive.
double frac_delta_kernel(const Rational& alpha, double t);

}  // namespace actionforge
