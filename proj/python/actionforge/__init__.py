"""Exact causal solutions and action diagnostics for linear constant-coefficient PDEs."""

from ._core import (
    Operator,
    Trajectory,
    case_json,
    describe_density,
    exact_divide,
    hamiltonian_trace,
    list_cases,
    periodic_gaussian,
    solve_case,
    solve_ic,
    verify_case,
)

__all__ = [
    "Operator",
    "Trajectory",
    "case_json",
    "describe_density",
    "exact_divide",
    "hamiltonian_trace",
    "list_cases",
    "periodic_gaussian",
    "solve_case",
    "solve_ic",
    "verify_case",
]
