#pragma once

#include "actionforge/diffop.hpp"
#include "actionforge/field.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace actionforge {

/// Per-mode time polynomial p(s) = sum a_m s^m of an operator at fixed k.
struct ModePoly {
    std::vector<cplx> coeffs;  ///< a_0 .. a_n, a_n != 0

    [[nodiscard]] int degree() const { return static_cast<int>(coeffs.size()) - 1; }
    [[nodiscard]] cplx leading() const { return coeffs.back(); }
};

/// profile(x) * delta^(order)(t)
struct Impulse {
    Field profile;
    int order = 0;
};

/// profile(x) * kernel(t), kernel = scale * t^(alpha-1)/Gamma(alpha) for t > 0
struct Memory {
    Field profile;
    FracKernel kernel;
};

/// Causal source f with f = 0 for t < 0. All profiles share one grid.
struct SourceSpec {
    std::vector<Impulse> impulses;
    std::vector<Memory> memories;

    [[nodiscard]] bool empty() const { return impulses.empty() && memories.empty(); }
    /// Grid of the first profile; throws when the source is empty.
    [[nodiscard]] const Grid& grid() const;
    /// Throws std::invalid_argument unless every profile lives on `g`.
    void validate(const Grid& g) const;
    /// Regular part of f at t > 0 (impulses vanish there), physical tag.
    [[nodiscard]] Field regular_part(const Grid& g, double t, int time_derivative = 0) const;
};

/// Sampled causal solution. states[i][m] is the spectrum of d_t^m u at times[i]
/// for m < orders; orders >= n, the time order of the operator.
struct Trajectory {
    Grid grid;
    std::vector<double> times;
    int orders = 0;
    std::vector<std::vector<Field>> states;
    DiffOp op{1};
    SourceSpec source;
    bool complex_data = false;

    [[nodiscard]] std::size_t size() const { return times.size(); }
    /// d_t^m u at sample i in physical space; real part only unless complex_data.
    [[nodiscard]] Field derivative(std::size_t i, int m = 0) const;
    [[nodiscard]] const Field& spectrum(std::size_t i, int m = 0) const;
};

struct SolveOptions {
    int orders = 0;         ///< stored derivative orders; 0 means n + 1
    int quad_nodes = 64;    ///< Gauss-Legendre nodes for memory terms
    bool complex_data = false;
};

/// a_m(k) = sum over alpha with alpha_0 = m of c_alpha (i k)^alpha_spatial.
ModePoly mode_polynomial(const DiffOp& a, std::span<const double> k);
/// Mode polynomials for every grid mode, using the same Nyquist treatment as apply_spatial.
std::vector<ModePoly> grid_mode_polynomials(const DiffOp& a, const Grid& g);

/// (g, g', ..., g^(n-1))(t) for the causal Green's function of p; zero for t < 0.
std::vector<cplx> greens_state(const ModePoly& p, double t);
/// Causal response to delta^(j) at t > 0, via s^j mod p(s).
cplx delta_response(const ModePoly& p, int j, double t);
/// Remainder r of s^j modulo p (coefficients r_0 .. r_{n-1}).
std::vector<cplx> reduce_power(const ModePoly& p, int j);
/// int_0^t g(t - tau) kernel(tau) dtau with tau = sigma^2 and Gauss-Legendre in sigma.
cplx duhamel(const ModePoly& p, const FracKernel& kernel, double t, int m_nodes = 64);

/// Jump matching: f = sum_j c_j delta^(j), c_j = sum_{m=j+1}^{n} a_m u_{m-1-j}.
SourceSpec source_from_ic(const DiffOp& a, const std::vector<Field>& ics);
/// Inverse of source_from_ic; impulses of order >= n are reduced modulo p first.
std::vector<Field> ic_from_source(const DiffOp& a, const SourceSpec& src);

/// Appends d_t^n u .. d_t^{n+extra-1} u at t = 0+ implied by A u = 0, to the n given fields.
std::vector<Field> extend_ics(const DiffOp& a, const std::vector<Field>& ics, int extra);

/// Exact per-mode causal solution of A u = f sampled at `times` (> 0, increasing).
Trajectory solve_causal(const DiffOp& a, const SourceSpec& src, const Grid& grid,
                        const std::vector<double>& times, const SolveOptions& options = {});

struct Elimination {
    DiffOp op;
    SourceSpec source;
};

/// d_t^{1/2} u + B u = phi d_t^{-1/2} delta  becomes  (d_t - B^2) u = phi delta - (B phi) t^{-1/2}/sqrt(pi).
Elimination eliminate_half_derivative(const DiffOp& b, const Field& phi);

/// Grunwald-Letnikov weights w_0 .. w_count-1 of order alpha.
std::vector<double> gl_weights(double alpha, std::size_t count);

struct GlOptions {
    bool implicit_b = false;    ///< treat B at the new level instead of the previous one
    double skip_below = 1e-18;  ///< modes with |phi_hat| below this fraction of the peak are not stepped
};

/// Brute-force oracle for d_t^alpha u + B u = d_t^alpha (phi H), stepping each
/// mode with Grunwald-Letnikov weights. Samples at the step nearest each time.
/// Throws std::runtime_error when a mode grows by more than 1e6.
Trajectory gl_fractional_oracle(const Rational& alpha, const DiffOp& b, const Field& phi, double dt,
                                double t_max, const std::vector<double>& times,
                                const GlOptions& options = {});

/// Uniform samples t_max * i / samples for i = 1 .. samples.
std::vector<double> uniform_times(double t_max, int samples);

}  // namespace actionforge
