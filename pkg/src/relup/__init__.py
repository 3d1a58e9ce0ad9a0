"""Bayesian reliability updating with equality information.

Measurements enter as likelihoods, each represented by an inequality
limit state over one extra standard Normal variable; conditional failure
probabilities are then ratios of two ordinary reliability problems.
"""
from .equivalent import (AugmentedProblem, BoundViolationError, EmpiricalMax, FromSupBound, UserValue,
                         augment, equivalent_lsf, scale_constant)
from .kernels import BACKEND
from .likelihood import (Likelihood, additive_error_likelihood, constant_likelihood,
                         likelihood_from_equality_lsf, product_likelihood, regularize_equality)
from .limit_state import CutSetSystem, Intersection, Leaf, LimitStateExpression, Union, evaluate, failure_indicator
from .probability import (Deterministic, Exponential, Lognormal, Normal, ProbabilisticModel, Weibull,
                          std_normal_cdf, std_normal_pdf, std_normal_quantile)
from .solvers import (ApisOptions, FormOptions, QuadratureOptions, ReliabilityResult, SolverError, apis,
                      form, monte_carlo, quadrature, sorm)
from .updating import (ConditionalResult, SolverSpec, ZeroDenominatorError, conditional_ci,
                       exact_conditional_1d, exact_conditional_linear_gaussian, update_reliability)

__version__ = "0.1.0"

__all__ = [
    "AugmentedProblem", "BoundViolationError", "EmpiricalMax", "FromSupBound", "UserValue", "augment",
    "equivalent_lsf", "scale_constant", "BACKEND",
    "Likelihood", "additive_error_likelihood", "constant_likelihood", "likelihood_from_equality_lsf",
    "product_likelihood", "regularize_equality",
    "CutSetSystem", "Intersection", "Leaf", "LimitStateExpression", "Union", "evaluate", "failure_indicator",
    "Deterministic", "Exponential", "Lognormal", "Normal", "ProbabilisticModel", "Weibull",
    "std_normal_cdf", "std_normal_pdf", "std_normal_quantile",
    "ApisOptions", "FormOptions", "QuadratureOptions", "ReliabilityResult", "SolverError",
    "apis", "form", "monte_carlo", "quadrature", "sorm",
    "ConditionalResult", "SolverSpec", "ZeroDenominatorError", "conditional_ci", "exact_conditional_1d",
    "exact_conditional_linear_gaussian", "update_reliability",
]
