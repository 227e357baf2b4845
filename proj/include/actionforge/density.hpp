#pragma once

#include "actionforge/diffop.hpp"
#include "actionforge/field.hpp"
#include "actionforge/solver.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace actionforge {

/// sign * weight * (op u)^2 with weight > 0 (1/2 for the usual quads). Complex pairs use |op u|^2.
struct QuadTerm {
    DiffOp op{1};
    int sign = 1;
    Rational weight{1, 2};
};

/// One factor of a coupling chain: an operator or the inverse of one.
struct ChainFactor {
    DiffOp op{1};
    bool inverse = false;
};

/// sign * weight * (Q f) (U u) with Q the product of the chain factors and U = u_op.
/// Complex pairs evaluate Re((Q f) conj(U u)), the symmetrized coupling.
struct SourceCoupling {
    std::vector<ChainFactor> chain;
    int sign = -1;
    Rational weight{1};
    DiffOp u_op{1};
};

/// weight * (op u); houses the mass density H_M = u.
struct LinearTerm {
    DiffOp op{1};
    Rational weight{1};
};

enum class DensityKind { lagrange, hamiltonian };

struct Density {
    DensityKind kind = DensityKind::lagrange;
    std::string name;
    int dim = 1;
    std::vector<QuadTerm> quads;
    std::vector<SourceCoupling> couplings;
    std::vector<LinearTerm> linears;
    /// Operators whose quads act as Legendre variables for the default Hamiltonian.
    std::vector<DiffOp> legendre_ops;
    bool complex_pair = false;

    /// Highest time derivative of u needed when A^{-1} f is read off a trajectory of `a`.
    [[nodiscard]] int required_order(const DiffOp& a) const;
};

enum class NamedDensity { trivial, p_density, normal, time_reversal, dalembert, mass, probability };

NamedDensity parse_named_density(std::string_view name);
std::string to_string(NamedDensity kind);

/// Builds the named density for A u = f. `p` is required for p_density only.
Density make_named_density(NamedDensity kind, const DiffOp& a, const std::optional<DiffOp>& p = std::nullopt);

/// H = sum over Legendre quads of (dL/d(Tu)) Tu - L: quads outside the set flip
/// sign, couplings flip sign, couplings acting on a Legendre variable cancel.
Density legendre_hamiltonian(const Density& l, const std::vector<DiffOp>& legendre_ops);
/// legendre_hamiltonian with the density's own Legendre set.
Density hamiltonian(const Density& l);

/// (H_+, H_-) with the positive / negative quads as Legendre sets.
std::pair<Density, Density> split_hamiltonian(const Density& l);

/// H[d_t^{n-1} u, d_t^{n-1} f].
Density higher_order_density(const Density& h, int n);

/// c1 * d1 + c2 * d2; negative factors flip signs, zero factors drop terms.
Density combine(const Density& d1, const Rational& c1, const Density& d2, const Rational& c2);

/// Readable formula, e.g. "1/2 (dt u)^2 - (dt^2 A^-1 f) u".
std::string describe(const Density& d);

/// Density spec strings:
///   trivial | normal | time_reversal | dalembert | probability | P:<op>   (Lagrange)
///   mass | energy | quad:<op> | sq:<op> | linear:<op> | H:<spec>          (Hamiltonian)
/// quad:<op> is 1/2 (op u)^2, sq:<op> is (op u)^2.
///   split+:<spec> | split-:<spec> | higher:<n>:<spec>
Density density_from_spec(std::string_view spec, const DiffOp& a, const ParamMap& params = {});

// ---------------------------------------------------------------------------
// Evaluation

/// Supplies d_t^m u at one time as a physical field.
using DerivativeFn = std::function<Field(int m)>;

/// sum_m slice_m(op) applied to d_t^m u.
Field apply_operator(const DiffOp& op, const DerivativeFn& u, const Grid& g);

/// Q f for every coupling at sample i. A^{-1} f is the trajectory itself when
/// the inverted operator is the trajectory's; other inverses are solved causally.
std::vector<Field> coupling_sources(const Density& d, const Trajectory& traj, std::size_t i);

/// Pointwise density values given u derivatives and precomputed coupling sources.
Field density_values(const Density& d, const DerivativeFn& u, const std::vector<Field>& sources,
                     const Grid& g);

/// Pointwise density at trajectory sample i (real field).
Field evaluate_density(const Density& d, const Trajectory& traj, std::size_t i);

}  // namespace actionforge
