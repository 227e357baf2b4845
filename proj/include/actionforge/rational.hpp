#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <complex>
#include <string>
#include <string_view>

namespace actionforge {

using Rational = boost::multiprecision::cpp_rational;
using cplx = std::complex<double>;

/// Exact Gaussian rational a + b i. Operator coefficients live here so that
/// operators like i d_t + 1/2 d_x^2 stay exact.
struct QComplex {
    Rational re{0};
    Rational im{0};

    QComplex() = default;
    QComplex(Rational r) : re(std::move(r)) {}  // NOLINT(google-explicit-constructor)
    QComplex(Rational r, Rational i) : re(std::move(r)), im(std::move(i)) {}
    QComplex(long long r) : re(r) {}  // NOLINT(google-explicit-constructor)

    [[nodiscard]] bool is_zero() const { return re == 0 && im == 0; }
    [[nodiscard]] bool is_real() const { return im == 0; }
    [[nodiscard]] QComplex conj() const { return {re, -im}; }
    [[nodiscard]] cplx to_complex() const {
        return {re.convert_to<double>(), im.convert_to<double>()};
    }

    friend QComplex operator+(const QComplex& a, const QComplex& b) {
        return {a.re + b.re, a.im + b.im};
    }
    friend QComplex operator-(const QComplex& a, const QComplex& b) {
        return {a.re - b.re, a.im - b.im};
    }
    friend QComplex operator-(const QComplex& a) { return {-a.re, -a.im}; }
    friend QComplex operator*(const QComplex& a, const QComplex& b) {
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    friend QComplex operator/(const QComplex& a, const QComplex& b) {
        Rational den = b.re * b.re + b.im * b.im;
        return {(a.re * b.re + a.im * b.im) / den, (a.im * b.re - a.re * b.im) / den};
    }
    QComplex& operator+=(const QComplex& o) { return *this = *this + o; }
    QComplex& operator-=(const QComplex& o) { return *this = *this - o; }
    QComplex& operator*=(const QComplex& o) { return *this = *this * o; }
    friend bool operator==(const QComplex& a, const QComplex& b) {
        return a.re == b.re && a.im == b.im;
    }
};

/// Integer power of an exact complex number (non-negative exponent).
QComplex pow(const QComplex& base, int exponent);

/// Parses "3", "-1/2", "0.25", "1e-3" into an exact rational. Decimal
/// notation is converted exactly (0.1 becomes 1/10).
Rational parse_rational(std::string_view text);

/// Canonical text for a rational: "3", "-1/2".
std::string to_string(const Rational& r);

}  // namespace actionforge
