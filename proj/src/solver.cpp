#include "actionforge/solver.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace actionforge {

using VecC = Eigen::VectorXcd;
using MatC = Eigen::MatrixXcd;

// ---------------------------------------------------------------------------
// SourceSpec / Trajectory

const Grid& SourceSpec::grid() const {
    if (!impulses.empty()) return impulses.front().profile.grid;
    if (!memories.empty()) return memories.front().profile.grid;
    throw std::invalid_argument("empty source has no grid");
}

void SourceSpec::validate(const Grid& g) const {
    for (const auto& imp : impulses) {
        if (!(imp.profile.grid == g)) throw std::invalid_argument("impulse profile grid differs from solve grid");
        if (imp.order < 0) throw std::invalid_argument("impulse order must be non-negative");
    }
    for (const auto& mem : memories) {
        if (!(mem.profile.grid == g)) throw std::invalid_argument("memory profile grid differs from solve grid");
    }
}

Field SourceSpec::regular_part(const Grid& g, double t, int time_derivative) const {
    Field out(g);
    if (t <= 0.0) return out;
    for (const auto& mem : memories) {
        double kv = mem.kernel.derivative(time_derivative, t);
        Field p = to_physical(mem.profile);
        for (std::size_t i = 0; i < out.size(); ++i) out.values[i] += kv * p.values[i];
    }
    return out;
}

const Field& Trajectory::spectrum(std::size_t i, int m) const {
    if (i >= states.size()) throw std::out_of_range("trajectory sample index out of range");
    if (m < 0 || m >= orders) {
        throw std::invalid_argument("trajectory stores derivative orders below " + std::to_string(orders) +
                                    ", requested order " + std::to_string(m));
    }
    return states[i][m];
}

Field Trajectory::derivative(std::size_t i, int m) const {
    Field p = to_physical(spectrum(i, m));
    if (complex_data) return p;
    // Per-mode round-off breaks Hermitian symmetry only at the 1e-16 level.
    return truncate_real(p, 1e-9);
}

// ---------------------------------------------------------------------------
// Mode polynomials

ModePoly mode_polynomial(const DiffOp& a, std::span<const double> k) {
    int n = a.time_order();
    if (n == 0) throw std::invalid_argument("operator has no time derivative: " + to_string(a));
    if (n > 8) throw std::invalid_argument("time order above 8 is not supported");
    ModePoly p;
    p.coeffs.resize(n + 1);
    for (int m = 0; m <= n; ++m) p.coeffs[m] = symbol_eval(a.time_slice(m), cplx(0.0), k);
    if (p.leading() == cplx(0.0)) throw std::domain_error("leading time coefficient vanishes");
    return p;
}

std::vector<ModePoly> grid_mode_polynomials(const DiffOp& a, const Grid& g) {
    int n = a.time_order();
    if (n == 0) throw std::invalid_argument("operator has no time derivative: " + to_string(a));
    if (n > 8) throw std::invalid_argument("time order above 8 is not supported");
    std::vector<std::vector<cplx>> slices;
    for (int m = 0; m <= n; ++m) slices.push_back(spatial_symbol(a.time_slice(m), g));
    std::vector<ModePoly> out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        out[i].coeffs.resize(n + 1);
        for (int m = 0; m <= n; ++m) out[i].coeffs[m] = slices[m][i];
        if (std::abs(out[i].leading()) == 0.0) {
            auto k = g.wavevector(i);
            std::ostringstream msg;
            msg << "degenerate mode: leading time coefficient vanishes at k = (" << k[0];
            for (int d = 1; d < g.dim; ++d) msg << ", " << k[d];
            msg << ")";
            throw std::domain_error(msg.str());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Companion propagator. The state x = (u, u', ..., u^(n-1)) is rescaled by
// D = diag(rho^m) with rho bounding the root moduli, so the scaled companion
// matrix has entries of size at most rho.

namespace {

class Propagator {
public:
    explicit Propagator(const ModePoly& p) : p_(p), n_(p.degree()) {
        if (n_ < 1) throw std::invalid_argument("mode polynomial must have degree >= 1");
        cplx an = p.leading();
        rho_ = 1.0;
        for (int m = 0; m < n_; ++m) {
            double r = std::pow(std::abs(p.coeffs[m] / an), 1.0 / (n_ - m));
            rho_ = std::max(rho_, r);
        }
        scaled_ = MatC::Zero(n_, n_);
        for (int i = 0; i + 1 < n_; ++i) scaled_(i, i + 1) = rho_;
        for (int m = 0; m < n_; ++m) {
            scaled_(n_ - 1, m) = -(p.coeffs[m] / an) * std::pow(rho_, m - n_ + 1);
        }
    }

    [[nodiscard]] int order() const { return n_; }

    /// x0 = e_{n-1} / a_n, the jump of the Green's function.
    [[nodiscard]] VecC green_initial() const {
        VecC x = VecC::Zero(n_);
        x(n_ - 1) = 1.0 / p_.leading();
        return x;
    }

    /// C x with the unscaled companion matrix.
    [[nodiscard]] VecC companion_apply(const VecC& x) const {
        VecC y(n_);
        for (int i = 0; i + 1 < n_; ++i) y(i) = x(i + 1);
        cplx last = 0.0;
        for (int m = 0; m < n_; ++m) last -= p_.coeffs[m] * x(m);
        y(n_ - 1) = last / p_.leading();
        return y;
    }

    [[nodiscard]] VecC to_scaled(const VecC& x) const {
        VecC y(n_);
        for (int m = 0; m < n_; ++m) y(m) = x(m) / std::pow(rho_, m);
        return y;
    }

    [[nodiscard]] VecC from_scaled(const VecC& y) const {
        VecC x(n_);
        for (int m = 0; m < n_; ++m) x(m) = y(m) * std::pow(rho_, m);
        return x;
    }

    /// exp(C_scaled t).
    [[nodiscard]] MatC scaled_exp(double t) const {
        if (n_ == 1) {
            MatC e(1, 1);
            e(0, 0) = std::exp(scaled_(0, 0) * t);
            return e;
        }
        MatC ct = scaled_ * t;
        return ct.exp();
    }

    /// exp(C t) x.
    [[nodiscard]] VecC evolve(const VecC& x, double t) const {
        if (t == 0.0) return x;
        return from_scaled(scaled_exp(t) * to_scaled(x));
    }

private:
    ModePoly p_;
    int n_;
    double rho_ = 1.0;
    MatC scaled_;
};

/// Gauss-Legendre rule on [-1, 1] via the Golub-Welsch eigenproblem.
const std::pair<std::vector<double>, std::vector<double>>& gauss_legendre_rule(int n) {
    static std::mutex mutex;
    static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
    std::lock_guard lock(mutex);
    if (auto it = cache.find(n); it != cache.end()) return it->second;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) {
        double b = i / std::sqrt(4.0 * i * i - 1.0);
        J(i, i - 1) = b;
        J(i - 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(J);
    std::vector<double> x(n), w(n);
    for (int i = 0; i < n; ++i) {
        x[i] = eig.eigenvalues()(i);
        double v = eig.eigenvectors()(0, i);
        w[i] = 2.0 * v * v;
    }
    return cache.emplace(n, std::make_pair(std::move(x), std::move(w))).first->second;
}

/// int_0^t exp(C (t - tau)) x0 kernel(tau) dtau with tau = sigma^2.
VecC duhamel_state(const Propagator& prop, const FracKernel& kernel, double t, int m_nodes) {
    VecC acc = VecC::Zero(prop.order());
    if (t <= 0.0 || kernel.scale == 0.0) return acc;
    if (m_nodes < 8) throw std::invalid_argument("duhamel needs at least 8 quadrature nodes");
    const auto& [x, w] = gauss_legendre_rule(m_nodes);
    const double half = 0.5 * std::sqrt(t);
    VecC x0 = prop.green_initial();
    for (int i = 0; i < m_nodes; ++i) {
        double sigma = half * (x[i] + 1.0);
        double tau = sigma * sigma;
        double weight = w[i] * half * 2.0 * sigma * kernel(tau);
        if (weight == 0.0) continue;
        acc += weight * prop.evolve(x0, t - tau);
    }
    return acc;
}

}  // namespace

std::vector<cplx> greens_state(const ModePoly& p, double t) {
    Propagator prop(p);
    if (t < 0.0) return std::vector<cplx>(p.degree(), cplx(0.0));
    VecC x = prop.evolve(prop.green_initial(), t);
    return {x.data(), x.data() + x.size()};
}

std::vector<cplx> reduce_power(const ModePoly& p, int j) {
    int n = p.degree();
    if (n < 1) throw std::invalid_argument("mode polynomial must have degree >= 1");
    if (j < 0) throw std::invalid_argument("negative power");
    std::vector<cplx> r(n, cplx(0.0));
    r[0] = 1.0;
    for (int step = 0; step < j; ++step) {
        // multiply by s, then eliminate s^n with p
        cplx top = r[n - 1];
        for (int m = n - 1; m > 0; --m) r[m] = r[m - 1];
        r[0] = 0.0;
        cplx factor = top / p.leading();
        for (int m = 0; m < n; ++m) r[m] -= factor * p.coeffs[m];
    }
    return r;
}

cplx delta_response(const ModePoly& p, int j, double t) {
    if (t <= 0.0) return 0.0;
    std::vector<cplx> r = reduce_power(p, j);
    std::vector<cplx> g = greens_state(p, t);
    cplx sum = 0.0;
    for (std::size_t m = 0; m < r.size(); ++m) sum += r[m] * g[m];
    return sum;
}

cplx duhamel(const ModePoly& p, const FracKernel& kernel, double t, int m_nodes) {
    Propagator prop(p);
    return duhamel_state(prop, kernel, t, m_nodes)(0);
}

// ---------------------------------------------------------------------------
// Initial conditions <-> impulses

namespace {

bool all_real(const Field& f) {
    Field p = to_physical(f);
    return std::all_of(p.values.begin(), p.values.end(), [](const cplx& v) { return v.imag() == 0.0; });
}

}  // namespace

SourceSpec source_from_ic(const DiffOp& a, const std::vector<Field>& ics) {
    int n = a.time_order();
    if (n == 0) throw std::invalid_argument("operator has no time derivative");
    if (static_cast<int>(ics.size()) != n) {
        throw std::invalid_argument("expected " + std::to_string(n) + " initial fields, got " +
                                    std::to_string(ics.size()));
    }
    const Grid& g = ics.front().grid;
    SourceSpec src;
    for (int j = 0; j < n; ++j) {
        Field c(g);
        for (int m = j + 1; m <= n; ++m) {
            DiffOp slice = a.time_slice(m);
            if (slice.is_zero()) continue;
            c += apply_spatial(slice, to_physical(ics[m - 1 - j]));
        }
        src.impulses.push_back({std::move(c), j});
    }
    return src;
}

std::vector<Field> ic_from_source(const DiffOp& a, const SourceSpec& src) {
    if (!src.memories.empty()) throw std::invalid_argument("ic_from_source: memory terms are not initial data");
    int n = a.time_order();
    if (n == 0) throw std::invalid_argument("operator has no time derivative");
    const Grid& g = src.grid();
    src.validate(g);
    std::vector<ModePoly> polys = grid_mode_polynomials(a, g);
    std::vector<Field> spectra;
    bool real = a.is_real();
    for (const auto& imp : src.impulses) {
        spectra.push_back(to_spectral(imp.profile));
        real = real && all_real(imp.profile);
    }

    std::vector<Field> ics(n, Field(g, FieldTag::spectral));
    std::vector<cplx> c(n), u(n);
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        const ModePoly& p = polys[idx];
        std::fill(c.begin(), c.end(), cplx(0.0));
        for (std::size_t s = 0; s < src.impulses.size(); ++s) {
            cplx amp = spectra[s].values[idx];
            if (amp == cplx(0.0)) continue;
            int j = src.impulses[s].order;
            if (j < n) {
                c[j] += amp;
            } else {
                std::vector<cplx> r = reduce_power(p, j);
                for (int m = 0; m < n; ++m) c[m] += r[m] * amp;
            }
        }
        // c_j = sum_{m=j+1}^{n} a_m u_{m-1-j}; solve for u_{n-1-j} from j = n-1 down.
        for (int j = n - 1; j >= 0; --j) {
            cplx rest = c[j];
            for (int m = j + 1; m < n; ++m) rest -= p.coeffs[m] * u[m - 1 - j];
            u[n - 1 - j] = rest / p.leading();
        }
        for (int m = 0; m < n; ++m) ics[m].values[idx] = u[m];
    }
    std::vector<Field> out;
    for (auto& f : ics) {
        Field phys = to_physical(f);
        if (real) phys = truncate_real(phys, 1e-9);
        out.push_back(std::move(phys));
    }
    return out;
}

std::vector<Field> extend_ics(const DiffOp& a, const std::vector<Field>& ics, int extra) {
    const int n = a.time_order();
    if (n == 0) throw std::invalid_argument("operator has no time derivative");
    if (static_cast<int>(ics.size()) != n) {
        throw std::invalid_argument("expected " + std::to_string(n) + " initial fields, got " + std::to_string(ics.size()));
    }
    if (extra < 0) throw std::invalid_argument("extra order count must be non-negative");
    const Grid& g = ics.front().grid;
    std::vector<ModePoly> polys = grid_mode_polynomials(a, g);
    std::vector<Field> spectra;
    bool real = a.is_real();
    for (const auto& f : ics) {
        if (!(f.grid == g)) throw std::invalid_argument("initial fields live on different grids");
        spectra.push_back(to_spectral(f));
        real = real && all_real(f);
    }
    for (int j = 0; j < extra; ++j) {
        Field next(g, FieldTag::spectral);
        for (std::size_t idx = 0; idx < g.size(); ++idx) {
            const ModePoly& p = polys[idx];
            cplx acc = 0.0;
            for (int m = 0; m < n; ++m) acc -= p.coeffs[m] * spectra[j + m].values[idx];
            next.values[idx] = acc / p.leading();
        }
        spectra.push_back(std::move(next));
    }
    // Each derived order multiplies transform round-off by the mode ratio, so the
    // non-Hermitian part is projected out instead of being tested.
    std::vector<Field> out;
    for (auto& f : spectra) {
        Field phys = to_physical(f);
        if (real) {
            for (cplx& v : phys.values) v = cplx(v.real(), 0.0);
        }
        out.push_back(std::move(phys));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Causal solve

Trajectory solve_causal(const DiffOp& a, const SourceSpec& src, const Grid& grid,
                        const std::vector<double>& times, const SolveOptions& options) {
    int n = a.time_order();
    if (n == 0) throw std::invalid_argument("operator has no time derivative: " + to_string(a));
    if (a.dim() != grid.dim) throw std::invalid_argument("operator and grid dimensions differ");
    src.validate(grid);
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (i > 0 && !(times[i] > times[i - 1])) throw std::invalid_argument("sample times must increase");
    }
    const int orders = options.orders > 0 ? options.orders : n + 1;
    if (orders < n) throw std::invalid_argument("trajectory must store at least n derivative orders");

    std::vector<ModePoly> polys = grid_mode_polynomials(a, grid);
    std::vector<Field> impulse_hat, memory_hat;
    for (const auto& imp : src.impulses) impulse_hat.push_back(to_spectral(imp.profile));
    for (const auto& mem : src.memories) memory_hat.push_back(to_spectral(mem.profile));

    Trajectory traj;
    traj.grid = grid;
    traj.times = times;
    traj.orders = orders;
    traj.op = a;
    traj.source = src;
    traj.complex_data = options.complex_data;
    traj.states.assign(times.size(), std::vector<Field>(orders, Field(grid, FieldTag::spectral)));

    std::vector<cplx> u(orders + n);
    for (std::size_t idx = 0; idx < grid.size(); ++idx) {
        bool active = false;
        for (const auto& f : impulse_hat) active = active || f.values[idx] != cplx(0.0);
        for (const auto& f : memory_hat) active = active || f.values[idx] != cplx(0.0);
        if (!active) continue;

        const ModePoly& p = polys[idx];
        Propagator prop(p);

        // y0 = sum over impulses c * C^j x0: the state just after t = 0.
        VecC y0 = VecC::Zero(n);
        for (std::size_t s = 0; s < impulse_hat.size(); ++s) {
            cplx amp = impulse_hat[s].values[idx];
            if (amp == cplx(0.0)) continue;
            VecC x = prop.green_initial();
            for (int j = 0; j < src.impulses[s].order; ++j) x = prop.companion_apply(x);
            y0 += amp * x;
        }
        bool has_impulse = y0.cwiseAbs().maxCoeff() > 0.0;

        VecC scaled = prop.to_scaled(y0);
        double prev_t = 0.0, cached_dt = -1.0;
        MatC step;
        for (std::size_t i = 0; i < times.size(); ++i) {
            double t = times[i];
            if (t <= 0.0) continue;  // causal: state stays zero
            VecC x = VecC::Zero(n);
            if (has_impulse) {
                double dt = t - prev_t;
                if (cached_dt < 0.0 || std::abs(dt - cached_dt) > 1e-13 * std::max(dt, 1.0)) {
                    step = prop.scaled_exp(dt);
                    cached_dt = dt;
                }
                scaled = step * scaled;
                prev_t = t;
                x = prop.from_scaled(scaled);
            }
            for (std::size_t s = 0; s < memory_hat.size(); ++s) {
                cplx amp = memory_hat[s].values[idx];
                if (amp == cplx(0.0)) continue;
                x += amp * duhamel_state(prop, src.memories[s].kernel, t, options.quad_nodes);
            }
            for (int m = 0; m < n; ++m) u[m] = x(m);
            // u^(n+j) = (f^(j) - sum_{m<n} a_m u^(m+j)) / a_n
            for (int j = 0; n + j < orders; ++j) {
                cplx f = 0.0;
                for (std::size_t s = 0; s < memory_hat.size(); ++s) {
                    f += memory_hat[s].values[idx] * src.memories[s].kernel.derivative(j, t);
                }
                for (int m = 0; m < n; ++m) f -= p.coeffs[m] * u[m + j];
                u[n + j] = f / p.leading();
            }
            for (int m = 0; m < orders; ++m) traj.states[i][m].values[idx] = u[m];
        }
    }
    return traj;
}

// ---------------------------------------------------------------------------
// Fractional elimination and the Grunwald-Letnikov oracle

Elimination eliminate_half_derivative(const DiffOp& b, const Field& phi) {
    if (!b.is_time_free()) throw std::invalid_argument("B must not contain time derivatives");
    if (b.dim() != phi.grid.dim) throw std::invalid_argument("B and phi dimensions differ");
    Elimination out{DiffOp::dt(b.dim()) - b * b, {}};
    out.source.impulses.push_back({to_physical(phi), 0});
    if (!b.is_zero()) {
        Field bphi = apply_spatial(b, to_physical(phi));
        out.source.memories.push_back({bphi * cplx(-1.0), FracKernel{Rational(1, 2), 1.0}});
    }
    return out;
}

std::vector<double> gl_weights(double alpha, std::size_t count) {
    std::vector<double> w(count);
    if (count == 0) return w;
    w[0] = 1.0;
    for (std::size_t j = 1; j < count; ++j) w[j] = w[j - 1] * (1.0 - (alpha + 1.0) / static_cast<double>(j));
    return w;
}

Trajectory gl_fractional_oracle(const Rational& alpha_q, const DiffOp& b, const Field& phi, double dt,
                                double t_max, const std::vector<double>& times, const GlOptions& options) {
    const double alpha = alpha_q.convert_to<double>();
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("GL oracle needs alpha in (0, 1]");
    if (!(dt > 0.0) || dt > 1e-3 * t_max * (1.0 + 1e-12)) {
        throw std::invalid_argument("GL oracle needs dt <= 1e-3 * t_max");
    }
    const Grid& g = phi.grid;
    std::vector<cplx> bsym = spatial_symbol(b, g);
    Field phi_hat = to_spectral(phi);
    const auto steps = static_cast<std::size_t>(std::llround(t_max / dt));

    std::vector<std::size_t> sample_steps;
    for (double t : times) {
        double r = t / dt;
        auto idx = static_cast<std::size_t>(std::llround(r));
        if (std::abs(r - static_cast<double>(idx)) > 1e-6 || idx == 0 || idx > steps) {
            throw std::invalid_argument("GL oracle sample times must be positive multiples of dt within t_max");
        }
        sample_steps.push_back(idx);
    }

    double peak = 0.0;
    for (const cplx& v : phi_hat.values) peak = std::max(peak, std::abs(v));
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (std::abs(phi_hat.values[i]) > options.skip_below * peak) active.push_back(i);
    }
    const std::size_t A = active.size();

    std::vector<double> w = gl_weights(alpha, steps + 1);
    const double dta = std::pow(dt, alpha);
    // History of v_n = u_n - phi per active mode, split into real/imag planes.
    std::vector<double> hre((steps + 1) * A), him((steps + 1) * A);
    std::vector<cplx> phis(A), bdt(A);
    for (std::size_t a = 0; a < A; ++a) {
        phis[a] = phi_hat.values[active[a]];
        bdt[a] = dta * bsym[active[a]];
    }
    // v_0 = 0: u(0+) = phi.
    std::vector<double> acc_re(A), acc_im(A);
    for (std::size_t n = 1; n <= steps; ++n) {
        std::fill(acc_re.begin(), acc_re.end(), 0.0);
        std::fill(acc_im.begin(), acc_im.end(), 0.0);
        for (std::size_t j = 1; j <= n; ++j) {
            const double wj = w[j];
            const double* pr = &hre[(n - j) * A];
            const double* pi = &him[(n - j) * A];
            for (std::size_t a = 0; a < A; ++a) {
                acc_re[a] += wj * pr[a];
                acc_im[a] += wj * pi[a];
            }
        }
        double* vr = &hre[n * A];
        double* vi = &him[n * A];
        for (std::size_t a = 0; a < A; ++a) {
            cplx hist(acc_re[a], acc_im[a]);
            cplx v;
            if (options.implicit_b) {
                // v_n + dta B (v_n + phi) = -hist
                v = (-hist - bdt[a] * phis[a]) / (1.0 + bdt[a]);
            } else {
                cplx prev(hre[(n - 1) * A + a], him[(n - 1) * A + a]);
                v = -hist - bdt[a] * (prev + phis[a]);
            }
            if (std::abs(v + phis[a]) > 1e6 * std::max(std::abs(phis[a]), 1e-300)) {
                auto k = g.wavevector(active[a]);
                std::ostringstream msg;
                msg << "GL oracle unstable at mode k = " << k[0] << " after " << n << " steps";
                throw std::runtime_error(msg.str());
            }
            vr[a] = v.real();
            vi[a] = v.imag();
        }
    }

    Trajectory traj;
    traj.grid = g;
    traj.times = times;
    traj.orders = 1;
    traj.op = b;
    traj.complex_data = false;
    traj.states.assign(times.size(), std::vector<Field>(1, Field(g, FieldTag::spectral)));
    for (std::size_t i = 0; i < times.size(); ++i) {
        std::size_t n = sample_steps[i];
        for (std::size_t a = 0; a < A; ++a) {
            traj.states[i][0].values[active[a]] = cplx(hre[n * A + a], him[n * A + a]) + phis[a];
        }
    }
    return traj;
}

std::vector<double> uniform_times(double t_max, int samples) {
    if (samples < 1 || !(t_max > 0.0)) throw std::invalid_argument("need t_max > 0 and samples >= 1");
    std::vector<double> t(samples);
    for (int i = 0; i < samples; ++i) t[i] = t_max * (i + 1) / samples;
    return t;
}

}  // namespace actionforge
