#include "actionforge/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace actionforge {

namespace {

constexpr double metric_floor = 1e-30;

std::string format_double(double v) {
    std::ostringstream out;
    out.precision(3);
    out << std::scientific << v;
    return out.str();
}

void require_samples(const TraceSeries& s, std::size_t count) {
    s.validate();
    if (s.values.size() < count) {
        throw std::invalid_argument("trace '" + s.label + "' needs at least " + std::to_string(count) + " samples");
    }
}

double squared_norm(const Field& f) {
    double n = l2_norm(f);
    return n * n;
}

void require_order(const Trajectory& traj, int order, const std::string& what) {
    if (order >= traj.orders) {
        throw std::invalid_argument(what + " needs d_t^" + std::to_string(order) + " u but the trajectory stores " +
                                    std::to_string(traj.orders) + " orders");
    }
}

}  // namespace

void TraceSeries::validate() const {
    if (times.size() != values.size()) throw std::invalid_argument("trace times and values differ in length");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] > 0.0)) throw std::invalid_argument("trace times must be positive");
        if (i > 0 && !(times[i] > times[i - 1])) throw std::invalid_argument("trace times must increase");
    }
}

std::string to_string(CheckKind kind) {
    switch (kind) {
        case CheckKind::conserved: return "conserved";
        case CheckKind::monotone_decreasing: return "monotone_decreasing";
        case CheckKind::identically_zero: return "identically_zero";
        case CheckKind::rate_identity: return "rate_identity";
        case CheckKind::stationary: return "stationary";
        case CheckKind::equivalent: return "equivalent";
    }
    return "unknown";
}

CheckKind parse_check_kind(std::string_view text) {
    static const std::map<std::string, CheckKind, std::less<>> kinds{
        {"conserved", CheckKind::conserved},
        {"monotone_decreasing", CheckKind::monotone_decreasing},
        {"identically_zero", CheckKind::identically_zero},
        {"rate_identity", CheckKind::rate_identity},
        {"stationary", CheckKind::stationary},
        {"equivalent", CheckKind::equivalent},
    };
    auto it = kinds.find(text);
    if (it == kinds.end()) throw std::invalid_argument("unknown check kind '" + std::string(text) + "'");
    return it->second;
}

double default_tolerance(CheckKind kind) {
    switch (kind) {
        case CheckKind::conserved: return 1e-8;
        case CheckKind::monotone_decreasing: return 1e-10;
        case CheckKind::identically_zero: return 1e-12;
        case CheckKind::rate_identity: return 1e-4;
        case CheckKind::stationary: return 1e-8;
        case CheckKind::equivalent: return 1e-8;
    }
    return 0.0;
}

CheckReport make_report(std::string name, CheckKind kind, double metric, double tolerance, std::string details) {
    CheckReport r;
    r.name = std::move(name);
    r.kind = kind;
    r.metric = metric;
    r.tolerance = tolerance;
    // NaN metrics fail.
    r.pass = metric <= tolerance;
    r.details = std::move(details);
    return r;
}

TraceSeries hamiltonian_trace(const Density& h, const Trajectory& traj, std::string label) {
    TraceSeries s;
    s.label = label.empty() ? h.name : std::move(label);
    s.times = traj.times;
    s.values.reserve(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) s.values.push_back(integrate(evaluate_density(h, traj, i)));
    s.validate();
    return s;
}

CheckReport conservation_check(const TraceSeries& s, double tol) {
    require_samples(s, 3);
    const double ref = s.values.front();
    double drift = 0.0;
    for (double v : s.values) drift = std::max(drift, std::abs(v - ref));
    double metric = drift / std::max(std::abs(ref), metric_floor);
    return make_report(s.label, CheckKind::conserved, metric, tol,
                       "initial value " + format_double(ref) + ", max drift " + format_double(drift));
}

CheckReport monotonicity_check(const TraceSeries& s, double tol) {
    require_samples(s, 3);
    double scale = 0.0, worst = 0.0;
    for (double v : s.values) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 1; i < s.values.size(); ++i) worst = std::max(worst, s.values[i] - s.values[i - 1]);
    double metric = worst / std::max(scale, metric_floor);
    return make_report(s.label, CheckKind::monotone_decreasing, metric, tol,
                       "largest increase " + format_double(worst) + " on scale " + format_double(scale));
}

CheckReport identically_zero_check(const Density& h, const Trajectory& traj, double tol, std::string label) {
    if (traj.size() == 0) throw std::invalid_argument("identically_zero_check needs samples");
    double scale_sq = squared_norm(traj.derivative(0, 0));
    double worst = 0.0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        Field v = evaluate_density(h, traj, i);
        double sum = 0.0;
        for (const auto& x : v.values) sum += std::abs(x);
        worst = std::max(worst, sum * traj.grid.cell_volume());
    }
    double metric = worst / std::max(scale_sq, metric_floor);
    return make_report(label.empty() ? h.name : std::move(label), CheckKind::identically_zero, metric, tol,
                       "max int |H| dx " + format_double(worst) + ", ||u(t1)||^2 " + format_double(scale_sq));
}

CheckReport rate_identity_check(const Trajectory& traj, double d0, double tol) {
    if (traj.size() < 3) throw std::invalid_argument("rate identity needs at least 3 samples");
    require_order(traj, 1, "rate identity");
    const double dt = traj.times[1] - traj.times[0];
    for (std::size_t i = 1; i < traj.size(); ++i) {
        if (std::abs(traj.times[i] - traj.times[i - 1] - dt) > 1e-9 * dt) {
            throw std::invalid_argument("rate identity needs uniformly spaced samples");
        }
    }
    Density energy = density_from_spec("energy", DiffOp::dt(traj.grid.dim));
    std::vector<double> h(traj.size()), dissipation(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
        h[i] = integrate(evaluate_density(energy, traj, i));
        dissipation[i] = d0 * squared_norm(traj.derivative(i, 1));
    }
    double worst = 0.0, scale = 0.0, h_scale = 0.0;
    for (std::size_t i = 1; i + 1 < traj.size(); ++i) {
        double rate = (h[i + 1] - h[i - 1]) / (2.0 * dt);
        worst = std::max(worst, std::abs(rate + dissipation[i]));
        scale = std::max(scale, std::abs(dissipation[i]));
    }
    for (double v : h) h_scale = std::max(h_scale, std::abs(v));
    // Without damping the identity is conservation of H_E; normalize by H_E itself.
    double denom = scale > 0.0 ? scale : h_scale;
    double metric = worst / std::max(denom, metric_floor);
    return make_report("rate H_E", CheckKind::rate_identity, metric, tol,
                       "dH_E/dt by centered differences (dt " + format_double(dt) +
                           "), u_t from trajectory state, d0 " + format_double(d0));
}

TraceSeries residual_trace(const DiffOp& a, const Trajectory& traj, const SourceSpec& src, std::string label) {
    require_order(traj, a.time_order(), "residual check");
    if (a.dim() != traj.grid.dim) throw std::invalid_argument("residual operator dimension differs from grid");
    TraceSeries s;
    s.label = label.empty() ? "residual " + to_string(a) : std::move(label);
    for (std::size_t i = 0; i < traj.size(); ++i) {
        if (traj.times[i] <= 0.0) throw std::invalid_argument("residual check needs sample times t > 0");
        Field r = apply_operator(a, [&](int m) { return traj.derivative(i, m); }, traj.grid);
        if (!src.empty()) r -= src.regular_part(traj.grid, traj.times[i], 0);
        double un = l2_norm(traj.derivative(i, 0));
        s.times.push_back(traj.times[i]);
        s.values.push_back(l2_norm(r) / std::max(un, metric_floor));
    }
    return s;
}

CheckReport residual_check(const DiffOp& a, const Trajectory& traj, const SourceSpec& src, double tol,
                           std::string label) {
    TraceSeries s = residual_trace(a, traj, src, std::move(label));
    double worst = 0.0;
    for (double v : s.values) worst = std::max(worst, v);
    return make_report(s.label, CheckKind::identically_zero, worst, tol, "max_t ||A u - f|| / ||u||");
}

CheckReport equivalence_check(const Trajectory& t1, const Trajectory& t2, double tol, std::string label) {
    if (!(t1.grid == t2.grid)) throw std::invalid_argument("equivalence check: grids differ");
    if (t1.size() != t2.size()) throw std::invalid_argument("equivalence check: sample counts differ");
    for (std::size_t i = 0; i < t1.size(); ++i) {
        if (std::abs(t1.times[i] - t2.times[i]) > 1e-12 * std::max(1.0, std::abs(t1.times[i]))) {
            throw std::invalid_argument("equivalence check: sample times differ");
        }
    }
    double dist = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < t1.size(); ++i) {
        Field u1 = t1.derivative(i, 0), u2 = t2.derivative(i, 0);
        dist = std::max(dist, l2_distance(u1, u2));
        scale = std::max(scale, l2_norm(u1));
    }
    double metric = dist / std::max(scale, metric_floor);
    return make_report(label.empty() ? "equivalence" : std::move(label), CheckKind::equivalent, metric, tol,
                       "max_t ||u1 - u2|| " + format_double(dist) + ", max_t ||u1|| " + format_double(scale));
}

std::vector<CheckReport> airy_higher_invariants(const Trajectory& traj, int n_max, double tol_zero,
                                                double tol_conserved) {
    if (traj.grid.dim != 1) throw std::invalid_argument("higher invariants are defined for 1D trajectories");
    if (n_max < 0) throw std::invalid_argument("n_max must be non-negative");
    if (traj.size() < 3) throw std::invalid_argument("higher invariants need at least 3 samples");
    const Grid& g = traj.grid;
    std::vector<CheckReport> out;
    for (int n = 0; n <= n_max; ++n) {
        DiffOp d = DiffOp::d(1, 1, 3 * n);
        // Resolution: the top third of the band must carry a negligible share of d^{3n} u.
        std::vector<cplx> sym = spatial_symbol(d, g);
        const Field& spec0 = traj.spectrum(0, 0);
        double total = 0.0, tail = 0.0;
        const double k_cut = (2.0 / 3.0) * 3.141592653589793 * g.n / g.length;
        for (std::size_t i = 0; i < g.size(); ++i) {
            double e = std::norm(sym[i] * spec0.values[i]);
            total += e;
            if (std::abs(g.wavevector(i)[0]) > k_cut) tail += e;
        }
        double tail_share = total > 0.0 ? tail / total : 0.0;
        if (tail_share > 1e-8) {
            throw std::invalid_argument("d_x^" + std::to_string(3 * n) + " u is not resolved: top-third spectral share " +
                                        format_double(tail_share) + " > 1e-8");
        }
        TraceSeries lin, quad;
        lin.label = n == 0 ? "int u" : "int d_x^" + std::to_string(3 * n) + " u";
        quad.label = "int (d_x^" + std::to_string(3 * n) + " u)^2";
        lin.times = quad.times = traj.times;
        double l1_scale = 0.0;
        for (std::size_t i = 0; i < traj.size(); ++i) {
            Field spec = traj.spectrum(i, 0);
            for (std::size_t j = 0; j < g.size(); ++j) spec.values[j] *= sym[j];
            Field v = to_physical(spec);
            lin.values.push_back(integrate(v));
            // Parseval on the spectrum avoids re-sampling round-off.
            double sum = 0.0;
            for (const auto& c : spec.values) sum += std::norm(c);
            quad.values.push_back(sum * g.cell_volume() / static_cast<double>(g.size()));
            if (i == 0) {
                for (const auto& x : v.values) l1_scale += std::abs(x);
                l1_scale *= g.cell_volume();
            }
        }
        if (n == 0) {
            out.push_back(conservation_check(lin, tol_conserved));
        } else {
            double worst = 0.0;
            for (double v : lin.values) worst = std::max(worst, std::abs(v));
            out.push_back(make_report(lin.label, CheckKind::conserved, worst / std::max(l1_scale, metric_floor),
                                      tol_zero, "max_t |value| relative to int |d_x^" + std::to_string(3 * n) + " u(t1)|"));
        }
        out.push_back(conservation_check(quad, tol_conserved));
    }
    return out;
}

// ---------------------------------------------------------------------------

double TimeBump::derivative(int m, double t) const {
    double r = (t - center) / half_width;
    if (std::abs(r) >= 1.0) return 0.0;
    // (1 - r^2)^power expanded in r, differentiated m times.
    std::vector<double> c(2 * power + 1, 0.0);
    double binom = 1.0;
    for (int j = 0; j <= power; ++j) {
        c[2 * j] = (j % 2 == 0 ? 1.0 : -1.0) * binom;
        binom = binom * (power - j) / (j + 1);
    }
    for (int k = 0; k < m; ++k) {
        for (std::size_t p = 0; p + 1 < c.size(); ++p) c[p] = c[p + 1] * static_cast<double>(p + 1);
        c.back() = 0.0;
    }
    double v = 0.0;
    for (std::size_t p = c.size(); p-- > 0;) v = v * r + c[p];
    return v / std::pow(half_width, m);
}

Field TestField::at(double t, int m) const {
    Field f = chi;
    f *= scale * eta.derivative(m, t);
    return f;
}

namespace {

std::vector<double> time_weights(const std::vector<double>& times) {
    std::vector<double> w(times.size(), 0.0);
    if (times.size() < 2) return w;
    for (std::size_t i = 0; i < times.size(); ++i) {
        double left = i > 0 ? times[i] - times[i - 1] : times[1] - times[0];
        double right = i + 1 < times.size() ? times[i + 1] - times[i] : times[i] - times[i - 1];
        w[i] = 0.5 * (left + right);
    }
    return w;
}

}  // namespace

TestField make_test_field(const Trajectory& traj, double t_center, double t_half_width, double x_center,
                          double x_half_width, int power) {
    if (traj.size() < 8) throw std::invalid_argument("test field needs at least 8 samples");
    if (!(t_half_width > 0.0) || !(x_half_width > 0.0)) throw std::invalid_argument("test field widths must be positive");
    TestField h;
    h.eta = TimeBump{t_center, t_half_width, power};
    const Grid& g = traj.grid;
    h.chi = Field::sample(g, [&](const std::array<double, 3>& x) {
        double v = 1.0;
        for (int a = 0; a < g.dim; ++a) {
            double r = (x[a] - x_center) / x_half_width;
            v *= std::abs(r) < 1.0 ? std::pow(1.0 - r * r, power) : 0.0;
        }
        return cplx(v, 0.0);
    });
    const std::size_t n_t = traj.size();
    for (std::size_t i = 0; i < n_t; ++i) {
        bool margin = i < 3 || i + 3 >= n_t;
        if (margin && std::abs(traj.times[i] - t_center) < t_half_width) {
            throw std::invalid_argument("test field touches the time boundary margin");
        }
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
        std::size_t rest = i;
        bool margin = false;
        for (int a = 0; a < g.dim; ++a) {
            std::size_t idx = rest % g.n;
            rest /= g.n;
            margin = margin || idx < 3 || idx + 3 >= static_cast<std::size_t>(g.n);
        }
        if (margin && h.chi.values[i] != cplx(0.0)) {
            throw std::invalid_argument("test field touches the spatial boundary margin");
        }
    }
    auto w = time_weights(traj.times);
    double eta_sq = 0.0;
    for (std::size_t i = 0; i < n_t; ++i) {
        double e = h.eta.derivative(0, traj.times[i]);
        eta_sq += w[i] * e * e;
    }
    double norm = std::sqrt(eta_sq * squared_norm(h.chi));
    if (!(norm > 0.0)) throw std::invalid_argument("test field vanishes on the samples");
    h.scale = 1.0 / norm;
    return h;
}

CheckReport action_stationarity(const Density& l, const Trajectory& traj, const TestField& h, double s_step,
                                double tol, double offset, std::string label) {
    if (l.kind != DensityKind::lagrange) throw std::invalid_argument("stationarity needs a Lagrange density");
    if (!(s_step > 0.0)) throw std::invalid_argument("stationarity step must be positive");
    require_order(traj, l.required_order(traj.op), "action stationarity");
    const Grid& g = traj.grid;
    if (!(h.chi.grid == g)) throw std::invalid_argument("test field grid differs from trajectory grid");
    auto w = time_weights(traj.times);

    std::vector<cplx> directions = {cplx(1.0, 0.0)};
    if (l.complex_pair) directions.push_back(cplx(0.0, 1.0));
    double h_norm_sq = 0.0;
    for (std::size_t i = 0; i < traj.size(); ++i) h_norm_sq += w[i] * squared_norm(h.at(traj.times[i], 0));
    const double h_norm = std::sqrt(h_norm_sq);

    double metric = 0.0;
    for (cplx dir : directions) {
        double diff = 0.0;
        for (std::size_t i = 0; i < traj.size(); ++i) {
            const double t = traj.times[i];
            if (std::abs(t - h.eta.center) >= h.eta.half_width) continue;  // u + s h == u - s h here
            auto sources = coupling_sources(l, traj, i);
            auto shifted = [&](double sign) {
                return [&, sign](int m) {
                    Field u = traj.derivative(i, m);
                    Field hv = h.at(t, m);
                    Field base = hv;
                    base *= offset;
                    u += base;
                    hv *= sign * s_step * dir;
                    u += hv;
                    return u;
                };
            };
            Field plus = density_values(l, shifted(1.0), sources, g);
            Field minus = density_values(l, shifted(-1.0), sources, g);
            plus -= minus;
            diff += w[i] * integrate(plus);
        }
        metric = std::max(metric, std::abs(diff) / (2.0 * s_step * std::max(h_norm, metric_floor)));
    }
    return make_report(label.empty() ? "stationary " + l.name : std::move(label), CheckKind::stationary, metric, tol,
                       "s " + format_double(s_step) + ", offset " + format_double(offset));
}

void write_trace_csv(std::ostream& out, const TraceSeries& s) {
    auto old = out.precision(17);
    out << "t," << s.label << '\n';
    for (std::size_t i = 0; i < s.times.size(); ++i) out << s.times[i] << ',' << s.values[i] << '\n';
    out.precision(old);
}

}  // namespace actionforge
