#include "doctest.h"

#include "actionforge/diagnostics.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace actionforge;

namespace {

constexpr double pi = std::numbers::pi;

DiffOp op(std::string_view text, int dim = 1, const ParamMap& params = {}) {
    return parse_diffop(text, dim, params);
}

Field gaussian(const Grid& g, double center, double sigma) {
    return Field::sample(g, [=](const std::array<double, 3>& x) {
        double r2 = 0.0;
        for (int a = 0; a < g.dim; ++a) r2 += (x[a] - center) * (x[a] - center);
        return cplx(std::exp(-r2 / (2.0 * sigma * sigma)), 0.0);
    });
}

Trajectory ic_trajectory(const DiffOp& a, const std::vector<Field>& ics, const Grid& g,
                         const std::vector<double>& times, int orders = 0) {
    SolveOptions opts;
    opts.orders = orders;
    return solve_causal(a, source_from_ic(a, ics), g, times, opts);
}

TraceSeries series(std::vector<double> values) {
    TraceSeries s;
    s.label = "q";
    for (std::size_t i = 0; i < values.size(); ++i) s.times.push_back(0.1 * static_cast<double>(i + 1));
    s.values = std::move(values);
    return s;
}

}  // namespace

TEST_CASE("trace validation and CSV") {
    TraceSeries s = series({1.0, 2.0, 3.0});
    s.validate();
    std::ostringstream out;
    write_trace_csv(out, s);
    CHECK(out.str().rfind("t,q\n", 0) == 0);
    CHECK(out.str().find("0.10000000000000001,1") != std::string::npos);
    s.times[1] = s.times[0];
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    CHECK_THROWS_AS(conservation_check(series({1.0, 1.0}), 1e-8), std::invalid_argument);
    CHECK(parse_check_kind("rate_identity") == CheckKind::rate_identity);
    CHECK_THROWS_AS(parse_check_kind("bogus"), std::invalid_argument);
    CHECK(to_string(CheckKind::monotone_decreasing) == "monotone_decreasing");
}

TEST_CASE("conservation and monotonicity metrics") {
    CHECK(conservation_check(series({2.0, 2.0, 2.0}), 0.0).pass);
    CheckReport r = conservation_check(series({2.0, 2.5, 1.0}), 1e-8);
    CHECK(r.metric == doctest::Approx(0.5));
    CHECK_FALSE(r.pass);
    // Relative metric: invariant under scaling of the trace.
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int t = 0; t < 20; ++t) {
        std::vector<double> v(6);
        for (auto& x : v) x = 1.0 + 0.1 * u(rng);
        double c = std::exp(3.0 * u(rng));
        std::vector<double> scaled = v;
        for (auto& x : scaled) x *= c;
        CHECK(conservation_check(series(scaled), 1.0).metric ==
              doctest::Approx(conservation_check(series(v), 1.0).metric).epsilon(1e-12));
    }
    CHECK(conservation_check(series({0.0, 0.0, 0.0}), 0.0).pass);

    CHECK(monotonicity_check(series({3.0, 2.0, 2.0, 1.0}), 0.0).pass);
    CHECK(monotonicity_check(series({1.0, 1.0, 1.0}), 0.0).pass);
    CheckReport flipped = monotonicity_check(series({-3.0, -2.0, -1.0}), 1e-10);
    CHECK_FALSE(flipped.pass);
    CHECK(flipped.metric == doctest::Approx(1.0 / 3.0));
    CheckReport nan = make_report("x", CheckKind::conserved, std::nan(""), 1.0);
    CHECK_FALSE(nan.pass);
}

TEST_CASE("hamiltonian traces") {
    Grid g(1, 64, 2 * pi);
    DiffOp a = op("dt + dx");
    Trajectory zero = solve_causal(a, SourceSpec{}, g, uniform_times(1.0, 4));
    TraceSeries s = hamiltonian_trace(hamiltonian(make_named_density(NamedDensity::trivial, a)), zero);
    for (double v : s.values) CHECK(v == 0.0);

    Grid g2(1, 128, 2 * pi);
    DiffOp diff = op("dt - 1/2 dx^2");
    Trajectory traj = ic_trajectory(diff, {gaussian(g2, pi, 0.4)}, g2, uniform_times(1.0, 10));
    Density ha = hamiltonian(make_named_density(NamedDensity::normal, diff));
    CheckReport z = identically_zero_check(ha, traj, 1e-12);
    CHECK(z.pass);
    CHECK(z.kind == CheckKind::identically_zero);
    // H_triv decays under diffusion.
    TraceSeries decay = hamiltonian_trace(hamiltonian(make_named_density(NamedDensity::trivial, diff)), traj);
    CHECK(monotonicity_check(decay, 1e-14).pass);
    CHECK_FALSE(conservation_check(decay, 1e-8).pass);
}

TEST_CASE("rate identity converges at second order") {
    Grid g(1, 128, 2 * pi);
    ParamMap params{{"d0", Rational(1, 2)}};
    DiffOp a = op("dt^2 + d0 dt - dx^2", 1, params);
    std::vector<Field> ics = {gaussian(g, pi, 0.5), gaussian(g, 2.0, 0.4)};
    Trajectory coarse = ic_trajectory(a, ics, g, uniform_times(1.0, 500));
    Trajectory fine = ic_trajectory(a, ics, g, uniform_times(1.0, 1000));
    CheckReport rc = rate_identity_check(coarse, 0.5, 1e-4);
    CheckReport rf = rate_identity_check(fine, 0.5, 1e-4);
    CHECK(rc.pass);
    CHECK(rf.pass);
    CHECK(rc.metric / rf.metric == doctest::Approx(4.0).epsilon(0.1));
    // A wrong damping coefficient breaks the identity.
    CHECK_FALSE(rate_identity_check(coarse, 0.4, 1e-4).pass);

    DiffOp wave = op("dt^2 - dx^2");
    Trajectory w = ic_trajectory(wave, ics, g, uniform_times(1.0, 500));
    CHECK(rate_identity_check(w, 0.0, 1e-4).pass);

    Trajectory uneven = ic_trajectory(a, ics, g, {0.1, 0.2, 0.4, 0.5});
    CHECK_THROWS_AS(rate_identity_check(uneven, 0.5, 1e-4), std::invalid_argument);
}

TEST_CASE("residual and equivalence checks") {
    Grid g(1, 128, 2 * pi);
    DiffOp a = op("dt^2 + 1/2 dt - dx^2");
    Trajectory traj = ic_trajectory(a, {gaussian(g, pi, 0.5), gaussian(g, 2.0, 0.4)}, g, uniform_times(1.0, 5));
    CHECK(residual_check(a, traj, traj.source, 1e-10).pass);

    Trajectory noisy = traj;
    std::mt19937_64 rng(9);
    std::normal_distribution<double> n(0.0, 1.0);
    for (auto& state : noisy.states) {
        Field p = to_physical(state[0]);
        for (auto& v : p.values) v += cplx(0.05 * n(rng), 0.0);
        state[0] = to_spectral(p);
    }
    CHECK(residual_check(a, noisy, traj.source, 1e-10).metric > 1e-2);
    CHECK_THROWS_AS(residual_check(op("dt^3 + dx"), traj, traj.source, 1e-10), std::invalid_argument);

    CHECK(equivalence_check(traj, traj, 0.0).metric == 0.0);
    CHECK(equivalence_check(traj, noisy, 1e-8).metric > 1e-3);
    Trajectory other = ic_trajectory(a, {gaussian(g, pi, 0.5), gaussian(g, 2.0, 0.4)}, g, uniform_times(1.0, 6));
    CHECK_THROWS_AS(equivalence_check(traj, other, 1e-8), std::invalid_argument);
}

TEST_CASE("airy invariants and bandwidth rejection") {
    Grid g(1, 512, 2 * pi);
    DiffOp a = op("dt + dx^3");
    Trajectory traj = ic_trajectory(a, {periodic_gaussian(g, pi, 0.5)}, g, uniform_times(1.0, 10));
    auto reports = airy_higher_invariants(traj, 2);
    REQUIRE(reports.size() == 6);
    for (const auto& r : reports) {
        INFO(r.name << " " << r.metric);
        CHECK(r.pass);
    }
    // Point sampling leaves round-off at every wavenumber; d_x^6 amplifies it beyond the signal.
    Trajectory sampled = ic_trajectory(a, {gaussian(g, pi, 0.5)}, g, uniform_times(1.0, 4));
    CHECK_THROWS_AS(airy_higher_invariants(sampled, 2), std::invalid_argument);
    Grid coarse(1, 16, 2 * pi);
    Trajectory rough = ic_trajectory(a, {gaussian(coarse, pi, 0.3)}, coarse, uniform_times(1.0, 4));
    CHECK_THROWS_AS(airy_higher_invariants(rough, 2), std::invalid_argument);
}

TEST_CASE("time bump derivatives") {
    TimeBump b{0.5, 0.3, 12};
    CHECK(b.derivative(0, 0.5) == doctest::Approx(1.0));
    CHECK(b.derivative(0, 0.81) == 0.0);
    for (int m = 0; m < 5; ++m) {
        for (double t : {0.3, 0.45, 0.62, 0.7}) {
            const double h = 1e-5;
            double fd = (b.derivative(m, t + h) - b.derivative(m, t - h)) / (2 * h);
            CHECK(b.derivative(m + 1, t) == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
        }
    }
}

TEST_CASE("action stationarity at and away from solutions") {
    Grid g(1, 128, 2 * pi);
    DiffOp a = op("dt + dx");
    Trajectory traj = ic_trajectory(a, {gaussian(g, pi, 0.4)}, g, uniform_times(2.0, 400), 3);
    TestField h = make_test_field(traj, 1.0, 0.5, pi, 1.5);

    for (const char* spec : {"trivial", "time_reversal", "dalembert", "normal", "P:dt + 2 dx"}) {
        Density l = density_from_spec(spec, a);
        INFO(spec);
        CheckReport at = action_stationarity(l, traj, h, 1e-4, 1e-8);
        CHECK(at.pass);
        CheckReport half = action_stationarity(l, traj, h, 5e-5, 1e-8);
        CHECK(half.pass);
        CheckReport off = action_stationarity(l, traj, h, 1e-4, 1e-8, 1e-2);
        CHECK(off.metric >= 1e-4);
    }
    Density combo = combine(density_from_spec("trivial", a), Rational(2, 3), density_from_spec("dalembert", a),
                            Rational(-5, 2));
    CHECK(action_stationarity(combo, traj, h, 1e-4, 1e-8).pass);

    // Away from the solution of a different equation the action is not stationary.
    Density foreign = make_named_density(NamedDensity::normal, op("dt - dx"));
    CHECK(action_stationarity(foreign, traj, h, 1e-4, 1e-8).metric > 1e-4);

    CHECK_THROWS_AS(make_test_field(traj, 0.3, 0.5, pi, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(make_test_field(traj, 1.0, 0.5, 0.5, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(action_stationarity(hamiltonian(density_from_spec("trivial", a)), traj, h, 1e-4, 1e-8),
                    std::invalid_argument);
}

TEST_CASE("stationarity for second-order dynamics and complex pairs") {
    Grid g(1, 128, 2 * pi);
    DiffOp a = op("dt^2 + 1/2 dt - dx^2");
    Trajectory traj = ic_trajectory(a, {gaussian(g, pi, 0.4), gaussian(g, 2.5, 0.5)}, g, uniform_times(2.0, 400), 3);
    TestField h = make_test_field(traj, 1.0, 0.4, pi, 2.0);
    for (const char* spec : {"trivial", "dalembert", "normal", "P:dt"}) {
        INFO(spec);
        Density l = density_from_spec(spec, a);
        CHECK(action_stationarity(l, traj, h, 1e-4, 1e-8).pass);
        CHECK(action_stationarity(l, traj, h, 1e-4, 1e-8, 1e-2).metric >= 1e-4);
    }

    DiffOp schr = op("i dt + 1/2 dx^2");
    SourceSpec src;
    Field iphi = gaussian(g, pi, 0.5);
    iphi *= cplx(0.0, 1.0);
    src.impulses.push_back({iphi, 0});
    SolveOptions opts;
    opts.complex_data = true;
    Trajectory q = solve_causal(schr, src, g, uniform_times(2.0, 200), opts);
    TestField hq = make_test_field(q, 1.0, 0.4, pi, 2.0);
    Density lp = make_named_density(NamedDensity::probability, schr);
    CHECK(action_stationarity(lp, q, hq, 1e-4, 1e-8).pass);
    CHECK(action_stationarity(lp, q, hq, 1e-4, 1e-8, 1e-2).metric >= 1e-4);
}
