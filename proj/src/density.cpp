#include "actionforge/density.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <sstream>
#include <stdexcept>

namespace actionforge {

namespace {

bool contains(const std::vector<DiffOp>& set, const DiffOp& op) {
    return std::find(set.begin(), set.end(), op) != set.end();
}

/// Product of the plain factors and product of the inverted ones.
std::pair<DiffOp, std::optional<DiffOp>> split_chain(const SourceCoupling& c, int dim) {
    DiffOp plain = DiffOp::identity(dim);
    std::optional<DiffOp> inverted;
    for (const auto& f : c.chain) {
        if (f.inverse) {
            inverted = inverted ? *inverted * f.op : f.op;
        } else {
            plain = plain * f.op;
        }
    }
    return {plain, inverted};
}

/// Drops the inverse when it divides the plain part exactly.
std::pair<DiffOp, std::optional<DiffOp>> reduced_chain(const SourceCoupling& c, int dim) {
    auto [plain, inverted] = split_chain(c, dim);
    if (inverted) {
        if (auto q = exact_divide(plain, *inverted)) return {*q, std::nullopt};
    }
    return {plain, inverted};
}

SourceCoupling coupling_for(const DiffOp& numerator, const DiffOp& a) {
    SourceCoupling c;
    if (auto q = exact_divide(numerator, a)) {
        c.chain = {ChainFactor{*q, false}};
    } else {
        c.chain = {ChainFactor{numerator, false}, ChainFactor{a, true}};
    }
    c.u_op = DiffOp::identity(a.dim());
    return c;
}

QuadTerm quad(const DiffOp& op, int sign) { return QuadTerm{op, sign, Rational(1, 2)}; }

std::string weight_prefix(const Rational& w) {
    if (w == 1) return "";
    return to_string(w) + " ";
}

std::string factor_text(const DiffOp& op) {
    if (op == DiffOp::identity(op.dim())) return "";
    return to_string(op) + " ";
}

}  // namespace

int Density::required_order(const DiffOp& a) const {
    int order = 0;
    for (const auto& q : quads) order = std::max(order, q.op.time_order());
    for (const auto& l : linears) order = std::max(order, l.op.time_order());
    for (const auto& c : couplings) {
        order = std::max(order, c.u_op.time_order());
        auto [plain, inverted] = reduced_chain(c, dim);
        if (inverted && *inverted == a) order = std::max(order, plain.time_order());
    }
    return order;
}

NamedDensity parse_named_density(std::string_view name) {
    static const std::map<std::string, NamedDensity, std::less<>> names{
        {"trivial", NamedDensity::trivial},         {"P", NamedDensity::p_density},
        {"normal", NamedDensity::normal},           {"time_reversal", NamedDensity::time_reversal},
        {"dalembert", NamedDensity::dalembert},     {"mass", NamedDensity::mass},
        {"probability", NamedDensity::probability},
    };
    auto it = names.find(name);
    if (it == names.end()) throw std::invalid_argument("unknown density kind '" + std::string(name) + "'");
    return it->second;
}

std::string to_string(NamedDensity kind) {
    switch (kind) {
        case NamedDensity::trivial: return "trivial";
        case NamedDensity::p_density: return "P";
        case NamedDensity::normal: return "normal";
        case NamedDensity::time_reversal: return "time_reversal";
        case NamedDensity::dalembert: return "dalembert";
        case NamedDensity::mass: return "mass";
        case NamedDensity::probability: return "probability";
    }
    return "unknown";
}

Density make_named_density(NamedDensity kind, const DiffOp& a, const std::optional<DiffOp>& p) {
    if (a.time_order() == 0) throw std::invalid_argument("density needs an evolution operator: " + to_string(a));
    const int dim = a.dim();
    const DiffOp id = DiffOp::identity(dim);
    Density d;
    d.dim = dim;
    d.name = to_string(kind);
    switch (kind) {
        case NamedDensity::trivial: {
            d.quads = {quad(id, 1)};
            SourceCoupling c;
            c.chain = {ChainFactor{a, true}};
            c.u_op = id;
            d.couplings = {c};
            d.legendre_ops = {id};
            break;
        }
        case NamedDensity::p_density:
        case NamedDensity::normal: {
            DiffOp op = a;
            if (kind == NamedDensity::p_density) {
                if (!p) throw std::invalid_argument("P density needs an operator");
                if (p->dim() != dim) throw std::invalid_argument("P density operator has the wrong dimension");
                if (p->is_zero()) throw std::invalid_argument("P density operator is zero");
                op = *p;
                d.name = "P:" + to_string(*p);
            }
            d.quads = {quad(op, 1)};
            d.couplings = {coupling_for(normal_op(op), a)};
            d.legendre_ops = {op};
            break;
        }
        case NamedDensity::time_reversal: {
            if (a.time_order() != 1 || !(a.time_slice(1) == id)) {
                throw std::invalid_argument("time_reversal density needs A = dt + B, got " + to_string(a));
            }
            DiffOp b = a.time_slice(0);
            int s0 = 1;
            if (!b.is_zero()) {
                DiffOp adj = adjoint(b);
                if (adj == b) {
                    s0 = 1;
                } else if (adj == -b) {
                    s0 = -1;
                } else {
                    throw std::invalid_argument("time_reversal density needs B* = +-B, got B = " + to_string(b));
                }
            }
            DiffOp dt = DiffOp::dt(dim);
            d.quads = {quad(dt, 1)};
            if (!b.is_zero()) d.quads.push_back(quad(b, s0));
            SourceCoupling c;
            c.chain = {ChainFactor{time_reverse(a), false}};
            c.u_op = id;
            d.couplings = {c};
            d.legendre_ops = {dt};
            break;
        }
        case NamedDensity::dalembert: {
            DiffOp dt = DiffOp::dt(dim);
            d.quads = {quad(dt, 1)};
            for (int axis = 1; axis <= dim; ++axis) d.quads.push_back(quad(DiffOp::d(dim, axis), -1));
            DiffOp box = -DiffOp::dt(dim, 2) + DiffOp::laplacian(dim);
            d.couplings = {coupling_for(box, a)};
            d.legendre_ops = {dt};
            break;
        }
        case NamedDensity::mass: {
            d.kind = DensityKind::hamiltonian;
            d.linears = {LinearTerm{id, Rational(1)}};
            break;
        }
        case NamedDensity::probability: {
            d.complex_pair = true;
            d.quads = {quad(id, 1)};
            SourceCoupling c;
            c.chain = {ChainFactor{a, true}};
            c.u_op = id;
            d.couplings = {c};
            d.legendre_ops = {id};
            break;
        }
    }
    return d;
}

namespace {

Density transform(const Density& l, const std::vector<DiffOp>& set) {
    Density h;
    h.kind = l.kind == DensityKind::lagrange ? DensityKind::hamiltonian : DensityKind::lagrange;
    h.dim = l.dim;
    h.complex_pair = l.complex_pair;
    h.legendre_ops = set;
    h.name = "H[" + l.name + "]";
    for (QuadTerm q : l.quads) {
        if (!contains(set, q.op)) q.sign = -q.sign;
        h.quads.push_back(q);
    }
    // Terms linear in a Legendre variable V contribute V dL/dV - term = 0.
    for (SourceCoupling c : l.couplings) {
        if (contains(set, c.u_op)) continue;
        c.sign = -c.sign;
        h.couplings.push_back(c);
    }
    for (LinearTerm lin : l.linears) {
        if (contains(set, lin.op)) continue;
        lin.weight = -lin.weight;
        h.linears.push_back(lin);
    }
    return h;
}

}  // namespace

Density legendre_hamiltonian(const Density& l, const std::vector<DiffOp>& legendre_ops) {
    if (legendre_ops.empty()) throw std::invalid_argument("Legendre set is empty");
    for (const auto& op : legendre_ops) {
        bool found = std::any_of(l.quads.begin(), l.quads.end(), [&](const QuadTerm& q) { return q.op == op; });
        if (!found) throw std::invalid_argument("Legendre operator " + to_string(op) + " has no quadratic term");
    }
    return transform(l, legendre_ops);
}

Density hamiltonian(const Density& l) {
    if (l.kind == DensityKind::hamiltonian) return l;
    return legendre_hamiltonian(l, l.legendre_ops);
}

std::pair<Density, Density> split_hamiltonian(const Density& l) {
    if (l.kind != DensityKind::lagrange) throw std::invalid_argument("split needs a Lagrange density");
    std::vector<DiffOp> plus, minus;
    for (const auto& q : l.quads) {
        auto& set = q.sign > 0 ? plus : minus;
        if (!contains(set, q.op)) set.push_back(q.op);
    }
    Density hp = transform(l, plus), hm = transform(l, minus);
    hp.name = "H+[" + l.name + "]";
    hm.name = "H-[" + l.name + "]";
    return {hp, hm};
}

Density higher_order_density(const Density& h, int n) {
    if (n < 1) throw std::invalid_argument("higher-order density needs n >= 1");
    if (n == 1) return h;
    const DiffOp lift = DiffOp::dt(h.dim, n - 1);
    Density out = h;
    out.name = "higher:" + std::to_string(n) + ":" + h.name;
    for (auto& q : out.quads) q.op = lift * q.op;
    for (auto& l : out.linears) l.op = lift * l.op;
    for (auto& op : out.legendre_ops) op = lift * op;
    for (auto& c : out.couplings) {
        c.chain.insert(c.chain.begin(), ChainFactor{lift, false});
        c.u_op = lift * c.u_op;
    }
    return out;
}

Density combine(const Density& d1, const Rational& c1, const Density& d2, const Rational& c2) {
    if (d1.dim != d2.dim) throw std::invalid_argument("combine: densities of different dimension");
    if (d1.kind != d2.kind) throw std::invalid_argument("combine: Lagrange and Hamiltonian densities mixed");
    if (d1.complex_pair != d2.complex_pair) throw std::invalid_argument("combine: complex and real densities mixed");
    Density out;
    out.kind = d1.kind;
    out.dim = d1.dim;
    out.complex_pair = d1.complex_pair;
    out.name = to_string(c1) + "*" + d1.name + " + " + to_string(c2) + "*" + d2.name;
    auto add = [&](const Density& d, const Rational& c) {
        if (c == 0) return;
        const int flip = c < 0 ? -1 : 1;
        const Rational mag = c < 0 ? Rational(-c) : c;
        for (QuadTerm q : d.quads) {
            q.sign *= flip;
            q.weight *= mag;
            out.quads.push_back(q);
        }
        for (SourceCoupling s : d.couplings) {
            s.sign *= flip;
            s.weight *= mag;
            out.couplings.push_back(s);
        }
        for (LinearTerm l : d.linears) {
            l.weight *= c;
            out.linears.push_back(l);
        }
        for (const auto& op : d.legendre_ops) {
            if (!contains(out.legendre_ops, op)) out.legendre_ops.push_back(op);
        }
    };
    add(d1, c1);
    add(d2, c2);
    return out;
}

std::string describe(const Density& d) {
    std::ostringstream out;
    bool first = true;
    auto sign = [&](bool negative) {
        if (first) {
            out << (negative ? "-" : "");
        } else {
            out << (negative ? " - " : " + ");
        }
        first = false;
    };
    for (const auto& q : d.quads) {
        sign(q.sign < 0);
        out << weight_prefix(q.weight) << (d.complex_pair ? "|" : "(") << factor_text(q.op) << "u"
            << (d.complex_pair ? "|^2" : ")^2");
    }
    for (const auto& c : d.couplings) {
        sign(c.sign < 0);
        out << weight_prefix(c.weight) << "(";
        for (const auto& f : c.chain) {
            out << "(" << to_string(f.op) << ")" << (f.inverse ? "^-1" : "") << " ";
        }
        out << "f) (" << factor_text(c.u_op) << (d.complex_pair ? "u*)" : "u)");
    }
    for (const auto& l : d.linears) {
        sign(l.weight < 0);
        Rational mag = l.weight < 0 ? Rational(-l.weight) : l.weight;
        out << weight_prefix(mag) << factor_text(l.op) << "u";
    }
    if (first) out << "0";
    return out.str();
}

namespace {

std::string_view strip_prefix(std::string_view s, std::string_view prefix) {
    return s.substr(prefix.size());
}

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }

}  // namespace

Density density_from_spec(std::string_view spec, const DiffOp& a, const ParamMap& params) {
    const int dim = a.dim();
    if (starts_with(spec, "split+:") || starts_with(spec, "split-:")) {
        Density l = density_from_spec(spec.substr(7), a, params);
        auto [hp, hm] = split_hamiltonian(l);
        return spec[5] == '+' ? hp : hm;
    }
    if (starts_with(spec, "higher:")) {
        std::string_view rest = strip_prefix(spec, "higher:");
        auto colon = rest.find(':');
        if (colon == std::string_view::npos) throw std::invalid_argument("higher density spec needs higher:<n>:<spec>");
        int n = 0;
        auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + colon, n);
        if (ec != std::errc() || ptr != rest.data() + colon) {
            throw std::invalid_argument("bad order in density spec '" + std::string(spec) + "'");
        }
        return higher_order_density(hamiltonian(density_from_spec(rest.substr(colon + 1), a, params)), n);
    }
    if (starts_with(spec, "H:")) return hamiltonian(density_from_spec(strip_prefix(spec, "H:"), a, params));
    if (starts_with(spec, "P:")) {
        return make_named_density(NamedDensity::p_density, a, parse_diffop(strip_prefix(spec, "P:"), dim, params));
    }
    if (starts_with(spec, "quad:") || starts_with(spec, "sq:") || starts_with(spec, "linear:")) {
        bool is_linear = starts_with(spec, "linear:");
        std::string_view text = spec.substr(spec.find(':') + 1);
        DiffOp op = parse_diffop(text, dim, params);
        Density h;
        h.kind = DensityKind::hamiltonian;
        h.dim = dim;
        h.name = std::string(spec);
        if (!is_linear) {
            h.quads = {quad(op, 1)};
            if (starts_with(spec, "sq:")) h.quads[0].weight = 1;
        } else {
            h.linears = {LinearTerm{op, Rational(1)}};
        }
        return h;
    }
    if (spec == "energy") {
        Density h;
        h.kind = DensityKind::hamiltonian;
        h.dim = dim;
        h.name = "energy";
        h.quads = {quad(DiffOp::dt(dim), 1)};
        for (int axis = 1; axis <= dim; ++axis) h.quads.push_back(quad(DiffOp::d(dim, axis), 1));
        return h;
    }
    NamedDensity kind = parse_named_density(spec);
    if (kind == NamedDensity::p_density) throw std::invalid_argument("P density spec needs P:<op>");
    return make_named_density(kind, a);
}

// ---------------------------------------------------------------------------

Field apply_operator(const DiffOp& op, const DerivativeFn& u, const Grid& g) {
    Field acc(g);
    for (int m = 0; m <= op.time_order(); ++m) {
        DiffOp slice = op.time_slice(m);
        if (slice.is_zero()) continue;
        acc += apply_spatial(slice, u(m));
    }
    return acc;
}

std::vector<Field> coupling_sources(const Density& d, const Trajectory& traj, std::size_t i) {
    const Grid& g = traj.grid;
    const double t = traj.times.at(i);
    std::vector<Field> out;
    for (const auto& c : d.couplings) {
        auto [plain, inverted] = reduced_chain(c, d.dim);
        if (!inverted) {
            // A pure differential operator sees only the regular part of f for t > 0.
            if (traj.source.memories.empty() || t <= 0.0) {
                out.emplace_back(g);
                continue;
            }
            out.push_back(apply_operator(plain, [&](int m) { return traj.source.regular_part(g, t, m); }, g));
        } else if (*inverted == traj.op) {
            out.push_back(apply_operator(plain, [&](int m) { return traj.derivative(i, m); }, g));
        } else {
            SolveOptions opts;
            opts.orders = std::max(plain.time_order() + 1, inverted->time_order());
            opts.complex_data = traj.complex_data;
            Trajectory w = solve_causal(*inverted, traj.source, g, {t}, opts);
            out.push_back(apply_operator(plain, [&](int m) { return w.derivative(0, m); }, g));
        }
    }
    return out;
}

Field density_values(const Density& d, const DerivativeFn& u, const std::vector<Field>& sources, const Grid& g) {
    if (sources.size() != d.couplings.size()) throw std::invalid_argument("one source field per coupling expected");
    std::map<int, Field> cache;
    DerivativeFn cached = [&](int m) -> Field {
        auto it = cache.find(m);
        if (it == cache.end()) it = cache.emplace(m, to_physical(u(m))).first;
        return it->second;
    };
    std::vector<double> acc(g.size(), 0.0);
    for (const auto& q : d.quads) {
        Field v = apply_operator(q.op, cached, g);
        const double w = q.sign * q.weight.convert_to<double>();
        for (std::size_t j = 0; j < acc.size(); ++j) {
            acc[j] += w * (d.complex_pair ? std::norm(v.values[j]) : (v.values[j] * v.values[j]).real());
        }
    }
    for (std::size_t c = 0; c < d.couplings.size(); ++c) {
        const auto& cp = d.couplings[c];
        Field v = apply_operator(cp.u_op, cached, g);
        Field s = to_physical(sources[c]);
        const double w = cp.sign * cp.weight.convert_to<double>();
        for (std::size_t j = 0; j < acc.size(); ++j) {
            cplx uv = d.complex_pair ? std::conj(v.values[j]) : v.values[j];
            acc[j] += w * (s.values[j] * uv).real();
        }
    }
    for (const auto& l : d.linears) {
        Field v = apply_operator(l.op, cached, g);
        const double w = l.weight.convert_to<double>();
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += w * v.values[j].real();
    }
    Field out(g);
    for (std::size_t j = 0; j < acc.size(); ++j) out.values[j] = cplx(acc[j], 0.0);
    return out;
}

Field evaluate_density(const Density& d, const Trajectory& traj, std::size_t i) {
    if (d.dim != traj.grid.dim) throw std::invalid_argument("density and trajectory dimensions differ");
    int need = d.required_order(traj.op);
    if (need >= traj.orders) {
        throw std::invalid_argument("density needs d_t^" + std::to_string(need) + " u but the trajectory stores " +
                                    std::to_string(traj.orders) + " orders");
    }
    auto sources = coupling_sources(d, traj, i);
    return density_values(d, [&](int m) { return traj.derivative(i, m); }, sources, traj.grid);
}

}  // namespace actionforge
