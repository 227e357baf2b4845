#pragma once

#include "actionforge/diagnostics.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace actionforge {

/// amp * op(periodic Gaussian centred at `center` on every axis).
struct ProfileTerm {
    double center = 0.0;
    double sigma = 0.5;
    double amp = 1.0;
    std::string op;  ///< spatial operator literal; empty means identity

    friend bool operator==(const ProfileTerm&, const ProfileTerm&) = default;
};

/// Sum of profile terms.
using ProfileSpec = std::vector<ProfileTerm>;

struct ImpulseConfig {
    int order = 0;
    ProfileSpec profile;

    friend bool operator==(const ImpulseConfig&, const ImpulseConfig&) = default;
};

/// Either initial data u_0 .. u_{n-1} or an explicit impulse list.
struct SourceConfig {
    std::vector<ProfileSpec> ics;
    std::vector<ImpulseConfig> impulses;

    friend bool operator==(const SourceConfig&, const SourceConfig&) = default;
};

/// A second formulation of the same problem, compared by `equivalent` checks.
///   exact       solve `op` (case operator when empty) with `source`
///   normal_ics  solve the normal operator with the case data extended by n derived orders
///   gl          Grunwald-Letnikov oracle of the fractional problem with step gl_dt
struct Alternative {
    std::string name;
    std::string method = "exact";
    std::string op;
    SourceConfig source;
    double gl_dt = 1e-4;
    bool gl_implicit = true;  ///< explicit B is unstable for the top modes once gl_dt >= 4e-4 on n = 256

    friend bool operator==(const Alternative&, const Alternative&) = default;
};

/// Targets by kind:
///   conserved            density spec | airy_invariants:<n>
///   monotone_decreasing  density spec
///   identically_zero     density spec | residual | residual:normal | residual:<op>
///   rate_identity        parameter name holding d0
///   stationary           Lagrange density spec | combine:<spec>|<spec>
///   equivalent           alternative name | traces:<spec>|<spec>|<factor>
struct CheckSpec {
    CheckKind kind = CheckKind::conserved;
    std::string target;
    double tolerance = 0.0;
    std::string label;  ///< trace file stem; derived from the target when empty

    friend bool operator==(const CheckSpec&, const CheckSpec&) = default;
};

/// Dense trajectory and test direction used by stationary checks.
struct StationaritySettings {
    int samples = 400;
    double t_center = 0.5;   ///< fraction of t_max
    double t_half = 0.35;    ///< fraction of t_max
    double x_half = 0.25;    ///< fraction of the box length
    double s_step = 1e-4;

    friend bool operator==(const StationaritySettings&, const StationaritySettings&) = default;
};

struct Case {
    std::string name;
    std::string description;
    std::string op;  ///< operator literal; for fractional cases the B of d_t^{1/2} u + B u
    ParamMap params;
    Grid grid;
    double t_max = 1.0;
    int samples = 16;
    SourceConfig source;
    bool fractional = false;  ///< d_t^{1/2} u + B u = phi d_t^{-1/2} delta with phi = source.ics[0]
    bool complex_data = false;
    int quad_nodes = 64;
    std::vector<std::string> densities;
    std::vector<Alternative> alternatives;
    std::vector<CheckSpec> checks;
    StationaritySettings stationarity;

    friend bool operator==(const Case&, const Case&) = default;

    /// Throws std::invalid_argument when the case is inconsistent.
    void validate() const;
};

std::vector<Case> builtin_cases();
/// Throws std::out_of_range for unknown names.
Case find_case(std::string_view name);

std::string case_to_json(const Case& c);
Case case_from_json(std::string_view text);
/// Applies a JSON merge patch (config file keys) to a case.
Case merge_config(const Case& base, std::string_view patch);

Field build_profile(const ProfileSpec& spec, const Grid& g, const ParamMap& params);
/// The operator the case actually solves (the eliminated one for fractional cases).
DiffOp case_operator(const Case& c);
SourceSpec case_source(const Case& c);
Trajectory solve_case(const Case& c, const std::vector<double>& times, int orders = 0);

struct CaseResult {
    std::string name;
    std::vector<CheckReport> reports;
    std::vector<TraceSeries> traces;
    Trajectory trajectory;
    std::map<std::string, std::string> notes;
    double wall_seconds = 0.0;

    [[nodiscard]] bool pass() const;
};

/// Stored derivative orders needed by the declared densities and residual checks.
int required_orders(const Case& c);

/// Dense trajectory and test direction shared by the stationary checks of a case.
struct StationarityProbe {
    Trajectory trajectory;
    TestField direction;
};
StationarityProbe stationarity_probe(const Case& c);
/// Lagrange density of a stationary target; combine:<a>|<b> means 3/2 a - 2/5 b.
Density stationarity_density(const Case& c, const std::string& target);

/// Solves the case and evaluates every declared check.
CaseResult run_checks(const Case& c);

/// Writes <dir>/<case>/{<trace>.csv, u_final.csv|u_final.bin, report.json}.
void write_case_outputs(const CaseResult& r, const std::filesystem::path& dir);
std::string report_json(const CaseResult& r);

}  // namespace actionforge
