#include "doctest.h"

#include "actionforge/cases.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

using namespace actionforge;

namespace {

bool has_check(const Case& c, CheckKind kind, std::string_view target) {
    for (const auto& ch : c.checks) {
        if (ch.kind == kind && ch.target == target) return true;
    }
    return false;
}

std::filesystem::path scratch_dir(std::string_view name) {
    auto dir = std::filesystem::temp_directory_path() / ("actionforge_" + std::string(name));
    std::filesystem::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("registry contents") {
    auto cases = builtin_cases();
    CHECK(cases.size() == 11);
    std::set<std::string> names;
    for (const auto& c : cases) {
        names.insert(c.name);
        CHECK_FALSE(c.description.empty());
        CHECK_FALSE(c.checks.empty());
    }
    CHECK(names.size() == 11);
    for (const char* expected : {"advection", "advection-3d", "diffusion", "airy", "beam", "telegraph",
                                 "wave-delta-trick", "nsw", "shear-wave", "fractional-half", "schrodinger"}) {
        CHECK(names.contains(expected));
    }

    Case airy = find_case("airy");
    CHECK(has_check(airy, CheckKind::conserved, "mass"));
    CHECK(has_check(airy, CheckKind::conserved, "H:time_reversal"));
    CHECK(has_check(airy, CheckKind::conserved, "airy_invariants:2"));

    Case tel = find_case("telegraph");
    CHECK(tel.params.at("d0") == Rational(1, 2));
    CHECK(has_check(tel, CheckKind::monotone_decreasing, "energy"));
    CHECK(has_check(tel, CheckKind::rate_identity, "d0"));

    Case nsw = find_case("nsw");
    CHECK(nsw.params.at("tau0") == Rational(1, 2));
    CHECK(nsw.params.at("tau1") == Rational(1, 4));
    CHECK(nsw.source.ics.size() == 3);

    Case a3 = find_case("advection-3d");
    CHECK(a3.grid.dim == 3);
    CHECK(a3.grid.n == 32);
}

TEST_CASE("unknown case") {
    CHECK_THROWS_AS(find_case("no-such-case"), std::out_of_range);
}

TEST_CASE("every builtin case round-trips through its config") {
    for (const auto& c : builtin_cases()) {
        CAPTURE(c.name);
        Case back = case_from_json(case_to_json(c));
        CHECK(back == c);
        CHECK(case_to_json(back) == case_to_json(c));
    }
}

TEST_CASE("config overrides") {
    Case base = find_case("beam");
    Case c = merge_config(base, R"({"grid": {"n": 128}, "time": {"t_max": 0.5}, "params": {"q": "3/7"}})");
    CHECK(c.grid.n == 128);
    CHECK(c.grid.dim == 1);
    CHECK(c.t_max == 0.5);
    CHECK(c.samples == base.samples);
    CHECK(c.params.at("q") == Rational(3, 7));
    CHECK(c.checks == base.checks);

    // Arrays are replaced wholesale; a missing tolerance takes the kind default.
    Case d = merge_config(base, R"({"checks": [{"kind": "conserved", "target": "mass"}]})");
    REQUIRE(d.checks.size() == 1);
    CHECK(d.checks[0].tolerance == default_tolerance(CheckKind::conserved));

    CHECK_THROWS_AS(merge_config(base, "{not json"), std::invalid_argument);
    CHECK_THROWS_AS(case_from_json(R"({"name": "x"})"), std::invalid_argument);
}

TEST_CASE("validation rejects inconsistent cases") {
    Case nsw = find_case("nsw");
    auto rejects = [](Case c) { CHECK_THROWS_AS(c.validate(), std::invalid_argument); };

    Case c = nsw;
    c.params["tau0"] = Rational(-1, 2);
    rejects(c);

    c = find_case("diffusion");
    c.params["D"] = Rational(0);
    rejects(c);

    c = nsw;
    c.op = "dt^2 + ) dx";
    rejects(c);

    c = nsw;
    c.op = "dx^2";
    rejects(c);

    c = nsw;
    c.source.ics.pop_back();
    rejects(c);

    c = nsw;
    c.checks.push_back(CheckSpec{CheckKind::conserved, "mass", 1e-8, {}});
    rejects(c);

    c = nsw;
    c.checks.push_back(CheckSpec{CheckKind::equivalent, "missing", 1e-8, {}});
    rejects(c);

    c = nsw;
    c.densities.push_back("no_such_density");
    rejects(c);

    c = find_case("telegraph");
    c.checks.push_back(CheckSpec{CheckKind::rate_identity, "d1", 1e-4, {}});
    rejects(c);

    c = nsw;
    c.alternatives[0].method = "gl";
    rejects(c);

    c = nsw;
    c.samples = 1;
    rejects(c);
}

TEST_CASE("profiles against closed forms") {
    Grid g(1, 256, 2 * std::numbers::pi);
    const double c = std::numbers::pi, s = 0.4;
    Field f = build_profile({ProfileTerm{c, s, 2.0, "dx^2"}, ProfileTerm{c, s, -1.0, {}}}, g, {});
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        double x = g.point(i)[0] - c;
        double gauss = std::exp(-x * x / (2 * s * s));
        double expected = 2.0 * (x * x / std::pow(s, 4) - 1.0 / (s * s)) * gauss - gauss;
        worst = std::max(worst, std::abs(f.values[i].real() - expected));
        CHECK(f.values[i].imag() == 0.0);
    }
    CHECK(worst < 1e-11 * 2.0 / (s * s));
}

TEST_CASE("beam case passes and a zero tolerance fails") {
    Case beam = find_case("beam");
    CaseResult r = run_checks(beam);
    CHECK(r.pass());
    for (const auto& rep : r.reports) {
        CAPTURE(rep.name);
        CHECK(rep.pass);
    }

    Case sabotaged = beam;
    sabotaged.checks[0].tolerance = 0.0;
    CaseResult bad = run_checks(sabotaged);
    CHECK_FALSE(bad.pass());
    CHECK_FALSE(bad.reports[0].pass);
}

TEST_CASE("shear wave residual vanishes under the causal source") {
    CaseResult r = run_checks(find_case("shear-wave"));
    REQUIRE_FALSE(r.reports.empty());
    CHECK(r.reports[0].name == "a");
    CHECK(r.reports[0].metric <= 1e-10);
    CHECK(r.pass());
}

TEST_CASE("delta trick equivalence") {
    CaseResult r = run_checks(find_case("wave-delta-trick"));
    CHECK(r.reports[0].kind == CheckKind::equivalent);
    CHECK(r.reports[0].metric <= 1e-12);
    CHECK(r.pass());
}

TEST_CASE("outputs on disk") {
    auto dir = scratch_dir("outputs");
    CaseResult r = run_checks(find_case("beam"));
    write_case_outputs(r, dir);
    CHECK(std::filesystem::exists(dir / "beam" / "H_M.csv"));
    CHECK(std::filesystem::exists(dir / "beam" / "u_final.csv"));
    std::ifstream report(dir / "beam" / "report.json");
    auto j = nlohmann::json::parse(report);
    CHECK(j.at("case") == "beam");
    CHECK(j.at("checks").size() == r.reports.size());

    std::ifstream trace(dir / "beam" / "H_M.csv");
    std::string header;
    std::getline(trace, header);
    CHECK(header == "t,H_M");
    int rows = 0;
    for (std::string line; std::getline(trace, line);) ++rows;
    CHECK(rows == find_case("beam").samples);

    Case small3d = merge_config(find_case("advection-3d"),
                                R"({"grid": {"n": 16}, "checks": [{"kind": "conserved", "target": "mass"}]})");
    CaseResult r3 = run_checks(small3d);
    write_case_outputs(r3, dir);
    CHECK(std::filesystem::exists(dir / "advection-3d" / "u_final.bin"));
    std::ifstream bin(dir / "advection-3d" / "u_final.bin", std::ios::binary);
    Field back = read_binary(bin);
    CHECK(back.grid == small3d.grid);
    CHECK(l2_distance(back, r3.trajectory.derivative(r3.trajectory.size() - 1)) == 0.0);
    std::filesystem::remove_all(dir);
}

TEST_CASE("fractional case records its quadrature nodes") {
    Case c = merge_config(find_case("fractional-half"),
                          R"({"quad_nodes": 128, "checks": [{"kind": "conserved", "target": "mass", "tolerance": 1e-6}]})");
    CaseResult r = run_checks(c);
    CHECK(r.notes.at("m_nodes") == "128");
    CHECK(r.pass());
}
