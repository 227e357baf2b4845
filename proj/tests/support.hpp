#pragma once
// Shared generators and independent oracles for the test suites.

#include "actionforge/diffop.hpp"

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace actionforge::testing {

inline Rational random_rational(std::mt19937_64& rng, int max_num = 9, int max_den = 7) {
    std::uniform_int_distribution<int> num(-max_num, max_num);
    std::uniform_int_distribution<int> den(1, max_den);
    return Rational(num(rng)) / Rational(den(rng));
}

inline QComplex random_qcomplex(std::mt19937_64& rng, bool allow_complex) {
    Rational re = random_rational(rng);
    Rational im = 0;
    if (allow_complex && std::uniform_int_distribution<int>(0, 3)(rng) == 0) im = random_rational(rng);
    return {re, im};
}

/// Random operator with at most `max_terms` terms and total order <= max_order.
inline DiffOp random_op(std::mt19937_64& rng, int dim, int max_order, int max_terms = 5,
                        bool allow_complex = false) {
    std::uniform_int_distribution<int> count(1, max_terms);
    std::uniform_int_distribution<int> order(0, max_order);
    DiffOp op(dim);
    int n = count(rng);
    for (int t = 0; t < n; ++t) {
        int budget = order(rng);
        MultiIndex index;
        for (int b = 0; b < budget; ++b) {
            int axis = std::uniform_int_distribution<int>(0, dim)(rng);
            ++index.alpha[axis];
        }
        op += DiffOp::monomial(dim, index, random_qcomplex(rng, allow_complex));
    }
    return op;
}

/// Fixed-Talbot numerical inverse Laplace transform (Abate & Valko). The
/// contour is deformed into the left half plane, which damps the integrand.
inline double talbot_inverse(const std::function<std::complex<double>(std::complex<double>)>& F,
                             double t, int M = 24) {
    using C = std::complex<double>;
    const double r = 2.0 * M / (5.0 * t);
    double sum = 0.5 * std::real(F(C(r, 0.0))) * std::exp(r * t);
    for (int k = 1; k < M; ++k) {
        double theta = k * std::numbers::pi / M;
        double cot = 1.0 / std::tan(theta);
        C s(r * theta * cot, r * theta);
        double sigma = theta + (theta * cot - 1.0) * cot;
        sum += std::real(std::exp(t * s) * F(s) * C(1.0, sigma));
    }
    return r / M * sum;
}

/// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on P_n.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int j = 2; j <= n; ++j) {
                double p2 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            double dp = n * (z * p1 - p0) / (z * z - 1.0);
            double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        double p0 = 1.0, p1 = z;
        for (int j = 2; j <= n; ++j) {
            double p2 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / j;
            p0 = p1;
            p1 = p2;
        }
        double dp = n * (z * p1 - p0) / (z * z - 1.0);
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
}

/// Adaptive Simpson quadrature, used as the reference integrator.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol, int depth = 50) {
    std::function<double(double, double, double, double, double, double, double, int)> rec =
        [&](double lo, double hi, double flo, double fmid, double fhi, double whole, double eps,
            int d) -> double {
        double mid = 0.5 * (lo + hi);
        double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
        double flm = f(lm), frm = f(rm);
        double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
        double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
        if (d <= 0 || std::abs(left + right - whole) <= 15.0 * eps) {
            return left + right + (left + right - whole) / 15.0;
        }
        return rec(lo, mid, flo, flm, fmid, left, eps / 2, d - 1) +
               rec(mid, hi, fmid, frm, fhi, right, eps / 2, d - 1);
    };
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return rec(a, b, fa, fm, fb, whole, tol, depth);
}

}  // namespace actionforge::testing
