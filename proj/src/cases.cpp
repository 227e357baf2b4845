#include "actionforge/cases.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <stdexcept>

namespace actionforge {

using nlohmann::json;

namespace {

constexpr double pi = std::numbers::pi;

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        out.emplace_back(s.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

bool targets_density(const CheckSpec& c) {
    switch (c.kind) {
        case CheckKind::conserved: return !starts_with(c.target, "airy_invariants:");
        case CheckKind::monotone_decreasing: return true;
        case CheckKind::identically_zero: return !starts_with(c.target, "residual");
        case CheckKind::stationary: return true;
        case CheckKind::rate_identity:
        case CheckKind::equivalent: return false;
    }
    return false;
}

/// Density specs referenced by a check.
std::vector<std::string> referenced_densities(const CheckSpec& c) {
    if (c.kind == CheckKind::equivalent && starts_with(c.target, "traces:")) {
        auto parts = split(std::string_view(c.target).substr(7), '|');
        std::vector<std::string> out;
        for (std::size_t i = 0; i < 2 && i < parts.size(); ++i) {
            out.push_back(starts_with(parts[i], "H:") ? parts[i].substr(2) : parts[i]);
        }
        return out;
    }
    if (!targets_density(c)) return {};
    if (starts_with(c.target, "combine:")) return split(std::string_view(c.target).substr(8), '|');
    if (starts_with(c.target, "H:")) return {c.target.substr(2)};
    return {c.target};
}

std::string sanitize(std::string_view s) {
    std::string out;
    for (char ch : s) out += std::isalnum(static_cast<unsigned char>(ch)) ? ch : '_';
    return out;
}

std::string check_label(const CheckSpec& c) { return c.label.empty() ? sanitize(c.target) : c.label; }

}  // namespace

// ---------------------------------------------------------------------------
// Profiles, operators, sources

Field build_profile(const ProfileSpec& spec, const Grid& g, const ParamMap& params) {
    Field out(g);
    for (const auto& term : spec) {
        DiffOp op = term.op.empty() ? DiffOp::identity(g.dim) : parse_diffop(term.op, g.dim, params);
        Field p = to_physical(apply_spatial(op, periodic_gaussian(g, term.center, term.sigma, term.amp)));
        // The Gaussian spectrum is Hermitian, so a real operator yields a real profile.
        if (op.is_real()) {
            for (cplx& v : p.values) v = cplx(v.real(), 0.0);
        }
        out += p;
    }
    return out;
}

DiffOp case_operator(const Case& c) {
    DiffOp op = parse_diffop(c.op, c.grid.dim, c.params);
    if (!c.fractional) return op;
    Field phi(c.grid);
    return eliminate_half_derivative(op, phi).op;
}

namespace {

SourceSpec build_source(const SourceConfig& cfg, const DiffOp& a, const Grid& g, const ParamMap& params) {
    if (!cfg.ics.empty()) {
        std::vector<Field> ics;
        for (const auto& p : cfg.ics) ics.push_back(build_profile(p, g, params));
        return source_from_ic(a, ics);
    }
    SourceSpec src;
    for (const auto& imp : cfg.impulses) src.impulses.push_back({build_profile(imp.profile, g, params), imp.order});
    return src;
}

}  // namespace

SourceSpec case_source(const Case& c) {
    if (c.fractional) {
        DiffOp b = parse_diffop(c.op, c.grid.dim, c.params);
        return eliminate_half_derivative(b, build_profile(c.source.ics.at(0), c.grid, c.params)).source;
    }
    return build_source(c.source, case_operator(c), c.grid, c.params);
}

Trajectory solve_case(const Case& c, const std::vector<double>& times, int orders) {
    SolveOptions opts;
    opts.orders = orders;
    opts.quad_nodes = c.quad_nodes;
    opts.complex_data = c.complex_data;
    return solve_causal(case_operator(c), case_source(c), c.grid, times, opts);
}

void Case::validate() const {
    auto fail = [&](const std::string& msg) { throw std::invalid_argument("case '" + name + "': " + msg); };
    if (name.empty()) throw std::invalid_argument("case without a name");
    for (const char* positive : {"tau0", "D", "c0"}) {
        auto it = params.find(positive);
        if (it != params.end() && !(it->second > 0)) fail(std::string(positive) + " must be positive");
    }
    DiffOp a;
    try {
        a = case_operator(*this);
    } catch (const std::exception& e) {
        fail(std::string("operator: ") + e.what());
    }
    if (a.time_order() == 0) fail("operator has no time derivative");
    if (!(t_max > 0.0)) fail("t_max must be positive");
    if (samples < 3) fail("at least 3 samples are required");
    if (quad_nodes < 8) fail("quadrature needs at least 8 nodes");
    if (!source.ics.empty() && !source.impulses.empty()) fail("give either initial data or impulses, not both");
    if (fractional) {
        if (source.ics.size() != 1) fail("fractional cases take exactly one profile");
    } else if (!source.ics.empty() && static_cast<int>(source.ics.size()) != a.time_order()) {
        fail("expected " + std::to_string(a.time_order()) + " initial fields");
    }
    for (const auto& d : densities) {
        try {
            (void)density_from_spec(d, a, params);
        } catch (const std::exception& e) {
            fail("density '" + d + "': " + e.what());
        }
    }
    for (const auto& check : checks) {
        for (const auto& d : referenced_densities(check)) {
            if (std::find(densities.begin(), densities.end(), d) == densities.end()) {
                fail("check references undeclared density '" + d + "'");
            }
        }
        if (check.kind == CheckKind::rate_identity && !params.contains(check.target)) {
            fail("rate identity parameter '" + check.target + "' is not defined");
        }
        if (check.kind == CheckKind::equivalent && !starts_with(check.target, "traces:")) {
            bool found = std::any_of(alternatives.begin(), alternatives.end(),
                                     [&](const Alternative& alt) { return alt.name == check.target; });
            if (!found) fail("check references unknown alternative '" + check.target + "'");
        }
        if (!(check.tolerance >= 0.0)) fail("negative tolerance");
    }
    for (const auto& alt : alternatives) {
        if (alt.method != "exact" && alt.method != "normal_ics" && alt.method != "gl") {
            fail("unknown alternative method '" + alt.method + "'");
        }
        if (alt.method == "gl" && !fractional) fail("the gl oracle applies to fractional cases only");
        if (alt.method == "normal_ics" && source.ics.empty()) fail("normal_ics needs initial data");
    }
}

// ---------------------------------------------------------------------------
// Registry. Every parameter and resolution below is a registry choice.

namespace {

ProfileSpec gauss(double center, double sigma, double amp = 1.0, std::string op = {}) {
    return {ProfileTerm{center, sigma, amp, std::move(op)}};
}

CheckSpec check(CheckKind kind, std::string target, double tol, std::string label = {}) {
    return CheckSpec{kind, std::move(target), tol, std::move(label)};
}

Case base(std::string name, std::string description, std::string op, int dim, int n, double t_max, int samples) {
    Case c;
    c.name = std::move(name);
    c.description = std::move(description);
    c.op = std::move(op);
    c.grid = Grid(dim, n, 2 * pi);
    c.t_max = t_max;
    c.samples = samples;
    return c;
}

}  // namespace

std::vector<Case> builtin_cases() {
    using K = CheckKind;
    std::vector<Case> cases;

    {
        Case c = base("advection", "Transport u_t + v u_x = 0 from Gaussian data; v = 1 is a registry choice.",
                      "dt + v dx", 1, 256, 4.0, 40);
        c.params = {{"v", Rational(1)}};
        c.source.ics = {gauss(pi, 0.3)};
        c.densities = {"trivial", "H:trivial", "mass", "time_reversal", "normal", "P:dt", "dalembert",
                       "sq:v dx", "sq:v^2 dx^2", "sq:v^3 dx^3", "higher:2:time_reversal", "higher:3:time_reversal"};
        c.checks = {check(K::conserved, "H:trivial", 1e-8, "H_triv"),
                    check(K::conserved, "mass", 1e-8, "H_M"),
                    check(K::conserved, "sq:v dx", 1e-8, "H_1"),
                    check(K::conserved, "sq:v^2 dx^2", 1e-8, "H_2"),
                    check(K::conserved, "sq:v^3 dx^3", 1e-8, "H_3"),
                    check(K::conserved, "higher:2:time_reversal", 1e-8, "H_tr_2"),
                    check(K::conserved, "higher:3:time_reversal", 1e-8, "H_tr_3"),
                    check(K::stationary, "trivial", 1e-8),
                    check(K::stationary, "time_reversal", 1e-8),
                    check(K::stationary, "normal", 1e-8),
                    check(K::stationary, "P:dt", 1e-8),
                    check(K::stationary, "combine:trivial|time_reversal", 1e-8)};
        c.stationarity.samples = 800;
        cases.push_back(c);
    }
    {
        Case c = base("advection-3d", "Transport along (1, 1, 1) on a 32^3 grid; exercises the 3D code paths.",
                      "dt + v dx + v dy + v dz", 3, 32, 1.0, 8);
        c.params = {{"v", Rational(1)}};
        c.source.ics = {gauss(pi, 0.6)};
        c.densities = {"trivial", "H:trivial", "mass", "normal"};
        c.checks = {check(K::conserved, "H:trivial", 1e-8, "H_triv"), check(K::conserved, "mass", 1e-8, "H_M"),
                    check(K::identically_zero, "H:normal", 1e-12, "H_A"), check(K::stationary, "trivial", 1e-8),
                    check(K::stationary, "normal", 1e-8)};
        c.stationarity.samples = 60;
        cases.push_back(c);
    }
    {
        Case c = base("diffusion",
                      "Advection-diffusion u_t + v u_x - D u_xx = 0; v = 1/2 and D = 1/2 are registry choices.",
                      "dt + v dx - D dx^2", 1, 256, 1.0, 20);
        c.params = {{"v", Rational(1, 2)}, {"D", Rational(1, 2)}};
        c.source.ics = {gauss(pi, 0.4)};
        c.densities = {"trivial", "H:trivial", "mass", "normal", "H:normal", "P:dt"};
        c.checks = {check(K::identically_zero, "H:normal", 1e-12, "H_A"),
                    check(K::conserved, "mass", 1e-10, "H_M"),
                    check(K::monotone_decreasing, "H:trivial", 1e-10, "H_triv"),
                    check(K::stationary, "trivial", 1e-8),
                    check(K::stationary, "normal", 1e-8),
                    check(K::stationary, "P:dt", 1e-8),
                    check(K::stationary, "combine:trivial|normal", 1e-8)};
        cases.push_back(c);
    }
    {
        Case c = base("airy", "Airy transport u_t + u_xxx = 0 from Gaussian data.", "dt + dx^3", 1, 512, 1.0, 20);
        c.source.ics = {gauss(pi, 0.5)};
        c.densities = {"trivial", "mass", "time_reversal", "H:time_reversal", "sq:dt", "normal"};
        c.checks = {check(K::conserved, "mass", 1e-10, "H_M"),
                    check(K::conserved, "H:time_reversal", 1e-8, "H"),
                    check(K::equivalent, "traces:H:time_reversal|sq:dt|1", 1e-10, "H_vs_ut2"),
                    check(K::conserved, "airy_invariants:2", 1e-8, "higher"),
                    check(K::stationary, "trivial", 1e-8),
                    check(K::stationary, "time_reversal", 1e-8),
                    check(K::stationary, "normal", 1e-8)};
        c.stationarity.samples = 2000;
        cases.push_back(c);
    }
    {
        Case c = base("beam", "Beam-type equation u_t + u_xxxx = phi delta.", "dt + dx^4", 1, 256, 1.0, 20);
        c.source.impulses = {ImpulseConfig{0, gauss(pi, 0.5)}};
        c.densities = {"trivial", "mass", "normal", "H:normal", "time_reversal"};
        c.checks = {check(K::conserved, "mass", 1e-10, "H_M"),
                    check(K::identically_zero, "H:normal", 1e-12, "H_A"),
                    check(K::stationary, "trivial", 1e-8),
                    check(K::stationary, "normal", 1e-8),
                    check(K::stationary, "time_reversal", 1e-8)};
        cases.push_back(c);
    }
    {
        Case c = base("telegraph", "Damped wave u_tt + d0 u_t - u_xx = 0; d0 = 1/2 is a registry choice.",
                      "dt^2 + d0 dt - dx^2", 1, 256, 1.0, 1000);
        c.params = {{"d0", Rational(1, 2)}};
        c.source.ics = {gauss(pi, 0.4), gauss(2.5, 0.5, 0.5)};
        c.densities = {"trivial", "energy", "dalembert", "normal", "P:dt"};
        c.checks = {check(K::monotone_decreasing, "energy", 1e-10, "H_E"),
                    check(K::rate_identity, "d0", 1e-4, "rate_H_E"),
                    check(K::stationary, "trivial", 1e-8),
                    check(K::stationary, "dalembert", 1e-8),
                    check(K::stationary, "normal", 1e-8),
                    check(K::stationary, "P:dt", 1e-8),
                    check(K::stationary, "combine:dalembert|normal", 1e-8)};
        cases.push_back(c);
    }
    {
        Case c = base("wave-delta-trick", "Wave equation driven by phi delta'' compared with phi_xx delta.",
                      "dt^2 - dx^2", 1, 256, 2.0, 20);
        c.source.impulses = {ImpulseConfig{2, gauss(pi, 0.4)}};
        Alternative alt;
        alt.name = "xx_source";
        alt.source.impulses = {ImpulseConfig{0, gauss(pi, 0.4, 1.0, "dx^2")}};
        c.alternatives = {alt};
        c.densities = {"trivial", "energy", "dalembert"};
        c.checks = {check(K::equivalent, "xx_source", 1e-12, "delta_trick"),
                    check(K::conserved, "energy", 1e-8, "H_E"),
                    check(K::stationary, "trivial", 1e-8),
                    check(K::stationary, "dalembert", 1e-8)};
        cases.push_back(c);
    }
    {
        Case c = base("nsw",
                      "Relaxation wave tau0 u_ttt + u_tt - lap u - tau1 lap u_t = 0; tau0 = 1/2, tau1 = 1/4 are "
                      "registry choices. Compared with the order-6 normal equation and derived data u3, u4, u5.",
                      "tau0 dt^3 + dt^2 - lap - tau1 dt lap", 1, 64, 1.0, 10);
        c.params = {{"tau0", Rational(1, 2)}, {"tau1", Rational(1, 4)}};
        c.source.ics = {gauss(pi, 0.5), gauss(2.5, 0.6, 0.5), gauss(4.0, 0.5, -0.3)};
        Alternative alt;
        alt.name = "normal_order6";
        alt.method = "normal_ics";
        c.alternatives = {alt};
        c.densities = {"trivial", "normal"};
        c.checks = {check(K::equivalent, "normal_order6", 1e-8, "order3_vs_order6"),
                    check(K::identically_zero, "residual:normal", 1e-8, "residual_order6"),
                    check(K::stationary, "trivial", 1e-8),
                    check(K::stationary, "normal", 1e-8)};
        cases.push_back(c);
    }
    {
        Case c = base("shear-wave",
                      "Shear potential psi_tt - c0^2 lap psi_t = psi1 delta'; the causal source forces "
                      "psi_t - c0^2 lap psi = 0 for t > 0.",
                      "dt^2 - c0^2 lap dt", 1, 256, 1.0, 20);
        c.params = {{"c0", Rational(1)}};
        c.source.impulses = {ImpulseConfig{1, gauss(pi, 0.5)}};
        c.densities = {"trivial", "normal", "mass"};
        c.checks = {check(K::identically_zero, "residual:dt - c0^2 lap", 1e-10, "a"),
                    check(K::conserved, "mass", 1e-10, "H_M"),
                    check(K::stationary, "trivial", 1e-8),
                    check(K::stationary, "normal", 1e-8)};
        cases.push_back(c);
    }
    {
        Case c = base("fractional-half",
                      "Half-order problem d_t^{1/2} u + v u_x = phi d_t^{-1/2} delta solved through its "
                      "first-order reformulation; v = 1/2 is a registry choice.",
                      "v dx", 1, 256, 1.0, 10);
        c.params = {{"v", Rational(1, 2)}};
        c.fractional = true;
        c.source.ics = {gauss(pi, 0.5)};
        Alternative alt;
        alt.name = "gl_oracle";
        alt.method = "gl";
        alt.gl_dt = 1e-4;
        c.alternatives = {alt};
        c.densities = {"trivial", "mass", "time_reversal"};
        c.checks = {check(K::equivalent, "gl_oracle", 1e-4, "duhamel_vs_gl"),
                    check(K::conserved, "mass", 1e-6, "H_M"),
                    check(K::stationary, "trivial", 1e-8),
                    check(K::stationary, "time_reversal", 1e-8)};
        cases.push_back(c);
    }
    {
        Case c = base("schrodinger", "Free Schroedinger i u_t + 1/2 u_xx = i phi delta, so u(0+) = phi.",
                      "i dt + 1/2 dx^2", 1, 256, 2.0, 20);
        c.complex_data = true;
        c.source.impulses = {ImpulseConfig{0, gauss(pi, 0.5, 1.0, "i")}};
        c.densities = {"probability", "H:probability"};
        c.checks = {check(K::conserved, "H:probability", 1e-10, "H_P"), check(K::stationary, "probability", 1e-8)};
        cases.push_back(c);
    }
    for (const auto& c : cases) c.validate();
    return cases;
}

Case find_case(std::string_view name) {
    for (auto& c : builtin_cases()) {
        if (c.name == name) return c;
    }
    throw std::out_of_range("unknown case '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json profile_json(const ProfileSpec& p) {
    json arr = json::array();
    for (const auto& t : p) arr.push_back({{"center", t.center}, {"sigma", t.sigma}, {"amp", t.amp}, {"op", t.op}});
    return arr;
}

ProfileSpec profile_from(const json& j) {
    ProfileSpec p;
    for (const auto& t : j) {
        p.push_back(ProfileTerm{t.at("center").get<double>(), t.at("sigma").get<double>(), t.value("amp", 1.0),
                                t.value("op", std::string())});
    }
    return p;
}

json source_json(const SourceConfig& s) {
    json j = json::object();
    if (!s.ics.empty()) {
        j["ics"] = json::array();
        for (const auto& p : s.ics) j["ics"].push_back(profile_json(p));
    }
    if (!s.impulses.empty()) {
        j["impulses"] = json::array();
        for (const auto& imp : s.impulses) j["impulses"].push_back({{"order", imp.order}, {"profile", profile_json(imp.profile)}});
    }
    return j;
}

SourceConfig source_from(const json& j) {
    SourceConfig s;
    if (j.contains("ics")) {
        for (const auto& p : j.at("ics")) s.ics.push_back(profile_from(p));
    }
    if (j.contains("impulses")) {
        for (const auto& imp : j.at("impulses")) {
            s.impulses.push_back(ImpulseConfig{imp.at("order").get<int>(), profile_from(imp.at("profile"))});
        }
    }
    return s;
}

json case_json(const Case& c) {
    json j;
    j["name"] = c.name;
    j["description"] = c.description;
    j["operator"] = c.op;
    j["params"] = json::object();
    for (const auto& [k, v] : c.params) j["params"][k] = to_string(v);
    j["grid"] = {{"n", c.grid.n}, {"length", c.grid.length}, {"dim", c.grid.dim}};
    j["time"] = {{"t_max", c.t_max}, {"samples", c.samples}};
    j["source"] = source_json(c.source);
    j["fractional"] = c.fractional;
    j["complex"] = c.complex_data;
    j["quad_nodes"] = c.quad_nodes;
    j["densities"] = c.densities;
    j["alternatives"] = json::array();
    for (const auto& a : c.alternatives) {
        j["alternatives"].push_back({{"name", a.name},
                                     {"method", a.method},
                                     {"operator", a.op},
                                     {"source", source_json(a.source)},
                                     {"gl_dt", a.gl_dt},
                                     {"gl_implicit", a.gl_implicit}});
    }
    j["checks"] = json::array();
    for (const auto& ch : c.checks) {
        j["checks"].push_back(
            {{"kind", to_string(ch.kind)}, {"target", ch.target}, {"tolerance", ch.tolerance}, {"label", ch.label}});
    }
    const auto& s = c.stationarity;
    j["stationarity"] = {{"samples", s.samples},
                         {"t_center", s.t_center},
                         {"t_half", s.t_half},
                         {"x_half", s.x_half},
                         {"s_step", s.s_step}};
    return j;
}

Case case_from(const json& j) {
    Case c;
    c.name = j.at("name").get<std::string>();
    c.description = j.value("description", std::string());
    c.op = j.at("operator").get<std::string>();
    if (j.contains("params")) {
        for (const auto& [k, v] : j.at("params").items()) {
            c.params[k] = v.is_string() ? parse_rational(v.get<std::string>()) : parse_rational(v.dump());
        }
    }
    const json& g = j.at("grid");
    c.grid = Grid(g.value("dim", 1), g.at("n").get<int>(), g.value("length", 2 * pi));
    c.t_max = j.at("time").at("t_max").get<double>();
    c.samples = j.at("time").at("samples").get<int>();
    c.source = source_from(j.at("source"));
    c.fractional = j.value("fractional", false);
    c.complex_data = j.value("complex", false);
    c.quad_nodes = j.value("quad_nodes", 64);
    c.densities = j.value("densities", std::vector<std::string>{});
    if (j.contains("alternatives")) {
        for (const auto& a : j.at("alternatives")) {
            Alternative alt;
            alt.name = a.at("name").get<std::string>();
            alt.method = a.value("method", std::string("exact"));
            alt.op = a.value("operator", std::string());
            if (a.contains("source")) alt.source = source_from(a.at("source"));
            alt.gl_dt = a.value("gl_dt", 1e-4);
            alt.gl_implicit = a.value("gl_implicit", true);
            c.alternatives.push_back(alt);
        }
    }
    if (j.contains("checks")) {
        for (const auto& ch : j.at("checks")) {
            CheckKind kind = parse_check_kind(ch.at("kind").get<std::string>());
            double tol = ch.contains("tolerance") ? ch.at("tolerance").get<double>() : default_tolerance(kind);
            c.checks.push_back(CheckSpec{kind, ch.at("target").get<std::string>(), tol, ch.value("label", std::string())});
        }
    }
    if (j.contains("stationarity")) {
        const json& s = j.at("stationarity");
        c.stationarity.samples = s.value("samples", c.stationarity.samples);
        c.stationarity.t_center = s.value("t_center", c.stationarity.t_center);
        c.stationarity.t_half = s.value("t_half", c.stationarity.t_half);
        c.stationarity.x_half = s.value("x_half", c.stationarity.x_half);
        c.stationarity.s_step = s.value("s_step", c.stationarity.s_step);
    }
    c.validate();
    return c;
}

}  // namespace

std::string case_to_json(const Case& c) { return case_json(c).dump(2); }

Case case_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
        return case_from(j);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("case config: ") + e.what());
    }
}

Case merge_config(const Case& base_case, std::string_view patch) {
    json j = case_json(base_case);
    try {
        j.merge_patch(json::parse(patch));
        return case_from(j);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("case config: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Running

bool CaseResult::pass() const {
    return std::all_of(reports.begin(), reports.end(), [](const CheckReport& r) { return r.pass; });
}

namespace {

Density density_for(const Case& c, const DiffOp& a, const std::string& spec) {
    return density_from_spec(spec, a, c.params);
}

std::optional<DiffOp> residual_operator(const Case& c, const DiffOp& a, const CheckSpec& ch) {
    if (ch.kind != CheckKind::identically_zero || !starts_with(ch.target, "residual")) return std::nullopt;
    if (ch.target == "residual") return a;
    std::string rest = ch.target.substr(9);
    if (rest == "normal") return normal_op(a);
    return parse_diffop(rest, c.grid.dim, c.params);
}

Trajectory alternative_trajectory(const Case& c, const Alternative& alt, const std::vector<double>& times) {
    SolveOptions opts;
    opts.quad_nodes = c.quad_nodes;
    opts.complex_data = c.complex_data;
    if (alt.method == "gl") {
        DiffOp b = parse_diffop(c.op, c.grid.dim, c.params);
        Field phi = build_profile(c.source.ics.at(0), c.grid, c.params);
        GlOptions gl;
        gl.implicit_b = alt.gl_implicit;
        return gl_fractional_oracle(Rational(1, 2), b, phi, alt.gl_dt, c.t_max, times, gl);
    }
    DiffOp a = case_operator(c);
    if (alt.method == "normal_ics") {
        std::vector<Field> ics;
        for (const auto& p : c.source.ics) ics.push_back(build_profile(p, c.grid, c.params));
        DiffOp n = normal_op(a);
        return solve_causal(n, source_from_ic(n, extend_ics(a, ics, a.time_order())), c.grid, times, opts);
    }
    DiffOp op = alt.op.empty() ? a : parse_diffop(alt.op, c.grid.dim, c.params);
    return solve_causal(op, build_source(alt.source, op, c.grid, c.params), c.grid, times, opts);
}

}  // namespace

int required_orders(const Case& c) {
    const DiffOp a = case_operator(c);
    int orders = a.time_order() + 1;
    for (const auto& spec : c.densities) orders = std::max(orders, density_for(c, a, spec).required_order(a) + 1);
    for (const auto& ch : c.checks) {
        if (auto r = residual_operator(c, a, ch)) orders = std::max(orders, r->time_order() + 1);
    }
    return orders;
}

StationarityProbe stationarity_probe(const Case& c) {
    const auto& s = c.stationarity;
    StationarityProbe probe;
    probe.trajectory = solve_case(c, uniform_times(c.t_max, s.samples), required_orders(c));
    probe.direction = make_test_field(probe.trajectory, s.t_center * c.t_max, s.t_half * c.t_max,
                                      0.5 * c.grid.length, s.x_half * c.grid.length);
    return probe;
}

Density stationarity_density(const Case& c, const std::string& target) {
    const DiffOp a = case_operator(c);
    if (starts_with(target, "combine:")) {
        auto parts = split(std::string_view(target).substr(8), '|');
        if (parts.size() != 2) throw std::invalid_argument("combine target needs two densities");
        return combine(density_for(c, a, parts[0]), Rational(3, 2), density_for(c, a, parts[1]), Rational(-2, 5));
    }
    return density_for(c, a, target);
}

CaseResult run_checks(const Case& c) {
    c.validate();
    auto start = std::chrono::steady_clock::now();
    CaseResult result;
    result.name = c.name;
    const DiffOp a = case_operator(c);

    const int orders = required_orders(c);
    result.notes["orders"] = std::to_string(orders);
    if (c.fractional) result.notes["m_nodes"] = std::to_string(c.quad_nodes);
    if (!c.fractional && !c.source.ics.empty()) {
        // Leading impulse order carrying u_j: jump matching gives n-1-j, the
        // alternative indexing n-1+j. Only the first reproduces the solved data.
        std::string jump, alt;
        const int n = a.time_order();
        for (int j = 0; j < n; ++j) {
            jump += (j ? ", u" : "u") + std::to_string(j) + ":delta^(" + std::to_string(n - 1 - j) + ")";
            alt += (j ? ", u" : "u") + std::to_string(j) + ":delta^(" + std::to_string(n - 1 + j) + ")";
        }
        result.notes["ic_impulses_jump_matching"] = jump;
        result.notes["ic_impulses_alternative_index"] = alt;
    }
    for (const auto& ch : c.checks) {
        if (ch.kind == CheckKind::stationary && starts_with(ch.target, "combine:")) {
            result.notes["combine"] = "3/2 L1 - 2/5 L2 has Hamiltonian 3/2 H1 - 2/5 H2 (linear), not H1 + H2";
        }
    }

    const auto times = uniform_times(c.t_max, c.samples);
    result.trajectory = solve_case(c, times, orders);
    const Trajectory& traj = result.trajectory;

    std::optional<StationarityProbe> probe;

    for (const auto& ch : c.checks) {
        const std::string label = check_label(ch);
        std::vector<CheckReport> reports;
        switch (ch.kind) {
            case CheckKind::conserved:
            case CheckKind::monotone_decreasing: {
                if (starts_with(ch.target, "airy_invariants:")) {
                    int n_max = std::stoi(ch.target.substr(16));
                    reports = airy_higher_invariants(traj, n_max, 1e-12, ch.tolerance);
                    for (auto& r : reports) r.name = label + " " + r.name;
                    break;
                }
                TraceSeries s = hamiltonian_trace(hamiltonian(density_for(c, a, ch.target)), traj, label);
                result.traces.push_back(s);
                reports.push_back(ch.kind == CheckKind::conserved ? conservation_check(s, ch.tolerance)
                                                                  : monotonicity_check(s, ch.tolerance));
                break;
            }
            case CheckKind::identically_zero: {
                if (auto r = residual_operator(c, a, ch)) {
                    TraceSeries s = residual_trace(*r, traj, traj.source, label);
                    double worst = *std::max_element(s.values.begin(), s.values.end());
                    reports.push_back(make_report(label, CheckKind::identically_zero, worst, ch.tolerance,
                                                  "max_t ||A u - f|| / ||u||"));
                    result.traces.push_back(std::move(s));
                } else {
                    reports.push_back(
                        identically_zero_check(hamiltonian(density_for(c, a, ch.target)), traj, ch.tolerance, label));
                }
                break;
            }
            case CheckKind::rate_identity: {
                double d0 = c.params.at(ch.target).convert_to<double>();
                reports.push_back(rate_identity_check(traj, d0, ch.tolerance));
                reports.back().name = label;
                break;
            }
            case CheckKind::stationary: {
                if (!probe) probe = stationarity_probe(c);
                reports.push_back(action_stationarity(stationarity_density(c, ch.target), probe->trajectory,
                                                      probe->direction, c.stationarity.s_step, ch.tolerance, 0.0,
                                                      "stationary " + ch.target));
                break;
            }
            case CheckKind::equivalent: {
                if (starts_with(ch.target, "traces:")) {
                    auto parts = split(std::string_view(ch.target).substr(7), '|');
                    double factor = parts.size() > 2 ? parse_rational(parts[2]).convert_to<double>() : 1.0;
                    TraceSeries s1 = hamiltonian_trace(hamiltonian(density_for(c, a, parts[0])), traj, parts[0]);
                    TraceSeries s2 = hamiltonian_trace(hamiltonian(density_for(c, a, parts[1])), traj, parts[1]);
                    double worst = 0.0, scale = 0.0;
                    for (std::size_t i = 0; i < s1.values.size(); ++i) {
                        worst = std::max(worst, std::abs(s1.values[i] - factor * s2.values[i]));
                        scale = std::max(scale, std::abs(factor * s2.values[i]));
                    }
                    reports.push_back(make_report(label, CheckKind::equivalent, worst / std::max(scale, 1e-30),
                                                  ch.tolerance, parts[0] + " against " + parts[1]));
                    break;
                }
                const auto& alt = *std::find_if(c.alternatives.begin(), c.alternatives.end(),
                                                [&](const Alternative& x) { return x.name == ch.target; });
                Trajectory other = alternative_trajectory(c, alt, times);
                reports.push_back(equivalence_check(traj, other, ch.tolerance, label));
                reports.back().details += ", method " + alt.method;
                if (alt.method == "gl") reports.back().details += alt.gl_implicit ? " (implicit B)" : " (explicit B)";
                break;
            }
        }
        for (auto& r : reports) result.reports.push_back(std::move(r));
    }
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

std::string report_json(const CaseResult& r) {
    json j;
    j["case"] = r.name;
    j["pass"] = r.pass();
    j["wall_seconds"] = r.wall_seconds;
    j["notes"] = r.notes;
    j["checks"] = json::array();
    for (const auto& rep : r.reports) {
        j["checks"].push_back({{"case", r.name},
                               {"check", rep.name},
                               {"kind", to_string(rep.kind)},
                               {"metric", rep.metric},
                               {"tolerance", rep.tolerance},
                               {"pass", rep.pass},
                               {"details", rep.details}});
    }
    return j.dump(2);
}

void write_case_outputs(const CaseResult& r, const std::filesystem::path& dir) {
    auto out_dir = dir / r.name;
    std::filesystem::create_directories(out_dir);
    auto open = [](const std::filesystem::path& p, std::ios::openmode mode = std::ios::out) {
        std::ofstream f(p, mode);
        if (!f) throw std::runtime_error("cannot write " + p.string());
        return f;
    };
    for (const auto& s : r.traces) {
        auto f = open(out_dir / (sanitize(s.label) + ".csv"));
        write_trace_csv(f, s);
    }
    if (r.trajectory.size() > 0) {
        Field u = r.trajectory.derivative(r.trajectory.size() - 1, 0);
        if (u.grid.dim == 1) {
            auto f = open(out_dir / "u_final.csv");
            write_csv(f, u);
        } else {
            auto f = open(out_dir / "u_final.bin", std::ios::out | std::ios::binary);
            write_binary(f, u);
        }
    }
    auto f = open(out_dir / "report.json");
    f << report_json(r) << '\n';
}

}  // namespace actionforge
