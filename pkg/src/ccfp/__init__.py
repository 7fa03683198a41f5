"""Chance-constrained fractional programs with a random benchmark.

Deterministic reformulation, secant/tangent bound sandwich and
analytic/Monte Carlo validation of the chance constraint.
"""

__version__ = "0.1.0"

from .approx import Breakpoints, PiecewiseAffine, eval_pwa, make_breakpoints, secant_coeffs, tangent_coeffs
from .model import (
    AssumptionReport,
    FeasibleSet,
    FunctionSpec,
    LinearRange,
    ProblemInstance,
    Scenario,
    eval_c,
    expected_scenario_vector,
    validate_instance,
)
from .reformulate import NlpProblem, Variant, build_nlp, eval_constraint, sigma
from .solver import SolveOptions, SolveResult, check_gradients, kkt_residual, solve
from .validate import ValidationReport, exact_probability, mc_probability

__all__ = [
    "AssumptionReport",
    "Breakpoints",
    "FeasibleSet",
    "FunctionSpec",
    "LinearRange",
    "NlpProblem",
    "PiecewiseAffine",
    "ProblemInstance",
    "Scenario",
    "SolveOptions",
    "SolveResult",
    "ValidationReport",
    "Variant",
    "build_nlp",
    "check_gradients",
    "eval_c",
    "eval_constraint",
    "eval_pwa",
    "exact_probability",
    "expected_scenario_vector",
    "kkt_residual",
    "make_breakpoints",
    "mc_probability",
    "secant_coeffs",
    "sigma",
    "solve",
    "tangent_coeffs",
    "validate_instance",
]
