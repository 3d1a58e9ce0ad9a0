from ._common import (ApisOptions, FormOptions, ReliabilityResult, SolverError, beta_from_p, p_from_beta,
                      thread_count)
from .apis import apis, line_search
from .form import form, sorm
from .montecarlo import monte_carlo, monte_carlo_counts
from .quadrature import QuadratureOptions, quadrature

__all__ = [
    "ApisOptions", "FormOptions", "QuadratureOptions", "ReliabilityResult", "SolverError",
    "beta_from_p", "p_from_beta", "thread_count",
    "apis", "line_search", "form", "sorm", "monte_carlo", "monte_carlo_counts", "quadrature",
]
