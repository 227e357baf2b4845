#pragma once

#include "actionforge/density.hpp"
#include "actionforge/field.hpp"
#include "actionforge/solver.hpp"

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace actionforge {

/// A scalar quantity sampled along a trajectory; times strictly increasing and > 0.
struct TraceSeries {
    std::vector<double> times;
    std::vector<double> values;
    std::string label;

    /// Throws std::invalid_argument on length mismatch or bad times.
    void validate() const;
};

enum class CheckKind { conserved, monotone_decreasing, identically_zero, rate_identity, stationary, equivalent };

std::string to_string(CheckKind kind);
CheckKind parse_check_kind(std::string_view text);

/// Default tolerance per kind.
double default_tolerance(CheckKind kind);

/// pass <=> metric <= tolerance.
struct CheckReport {
    std::string name;
    CheckKind kind = CheckKind::conserved;
    double metric = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string details;
};

CheckReport make_report(std::string name, CheckKind kind, double metric, double tolerance, std::string details = {});

/// integrate(evaluate_density(h, traj, i)) for every sample.
TraceSeries hamiltonian_trace(const Density& h, const Trajectory& traj, std::string label = {});

/// max_t |s(t) - s(t1)| / max(|s(t1)|, 1e-30).
CheckReport conservation_check(const TraceSeries& s, double tol);
/// Largest positive increment relative to max |s|.
CheckReport monotonicity_check(const TraceSeries& s, double tol);
/// max_t int |H| dx divided by ||u(t1)||^2.
CheckReport identically_zero_check(const Density& h, const Trajectory& traj, double tol, std::string label = {});
/// Centered-difference dH_E/dt against -d0 int u_t^2 on uniformly spaced samples.
CheckReport rate_identity_check(const Trajectory& traj, double d0, double tol);
/// ||A u - f_regular|| / ||u|| per sample, time derivatives from the trajectory state.
TraceSeries residual_trace(const DiffOp& a, const Trajectory& traj, const SourceSpec& src, std::string label = {});
/// Maximum of residual_trace.
CheckReport residual_check(const DiffOp& a, const Trajectory& traj, const SourceSpec& src, double tol,
                           std::string label = {});
/// max_t ||u1 - u2|| / max_t ||u1||; grids and sample times must agree.
CheckReport equivalence_check(const Trajectory& t1, const Trajectory& t2, double tol, std::string label = {});
/// Reports for int d_x^{3n} u (zero) and int (d_x^{3n} u)^2 (constant), 0 <= n <= n_max.
/// Throws std::invalid_argument when the derivatives are not resolved by the grid.
std::vector<CheckReport> airy_higher_invariants(const Trajectory& traj, int n_max, double tol_zero = 1e-12,
                                                double tol_conserved = 1e-8);

/// Polynomial bump (1 - r^2)^power with r = (t - center) / half_width, zero for |r| >= 1.
struct TimeBump {
    double center = 0.0;
    double half_width = 1.0;
    int power = 12;

    [[nodiscard]] double derivative(int m, double t) const;
};

/// Separable test direction h(t, x) = scale * eta(t) * chi(x).
struct TestField {
    TimeBump eta;
    Field chi;
    double scale = 1.0;

    [[nodiscard]] Field at(double t, int m) const;
};

/// Test field centred in the sampled box, normalized to unit discrete space-time norm.
/// Spatial support: a polynomial bump of the given half width around x_center on every axis.
TestField make_test_field(const Trajectory& traj, double t_center, double t_half_width,
                          double x_center, double x_half_width, int power = 12);

/// |S[u + s h] - S[u - s h]| / (2 s ||h||) with S = dx^d sum_t w_t sum_x L. Couplings are
/// evaluated on the unperturbed trajectory. `offset` shifts u by offset * h before probing.
/// Complex pairs probe along h and i h and report the larger value.
CheckReport action_stationarity(const Density& l, const Trajectory& traj, const TestField& h, double s_step,
                                double tol, double offset = 0.0, std::string label = {});

/// CSV with header "t,<label>" and 17 significant digits.
void write_trace_csv(std::ostream& out, const TraceSeries& s);

}  // namespace actionforge
