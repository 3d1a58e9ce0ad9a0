"""Marginal distributions, bi-Normal pairs and the map to standard normal space."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .rng import standard_normal_rows

__all__ = [
    "std_normal_cdf", "std_normal_pdf", "std_normal_quantile",
    "Marginal", "Normal", "Lognormal", "Weibull", "Exponential", "Deterministic",
    "ProbabilisticModel", "to_standard_normal", "from_standard_normal", "sample",
    "DomainError",
]


class DomainError(ValueError):
    """Argument outside the domain of a distribution function."""


def std_normal_cdf(x):
    """Standard normal cdf; scalar in, float out, arrays in, arrays out."""
    out = kernels.norm_cdf(np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def std_normal_pdf(x):
    out = kernels.norm_pdf(np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def std_normal_quantile(p):
    """Inverse standard normal cdf, exact to about one ulp down to p = 1e-300.

    Raises DomainError for p outside [0, 1]; returns -inf / +inf at the ends.
    """
    arr = np.asarray(p, dtype=float)
    if np.any((arr < 0.0) | (arr > 1.0)) or np.any(np.isnan(arr)):
        raise DomainError(f"probability outside [0, 1]: {p!r}")
    out = kernels.norm_ppf(arr)
    return float(out) if np.ndim(out) == 0 else out


def _scalar_or_array(out):
    return float(out) if np.ndim(out) == 0 else out


class Marginal:
    """Base class for one-dimensional distributions.

    Subclasses provide ``cdf``, ``sf``, ``pdf`` and the two quantile
    functions; the standard-normal maps are derived here and switch to the
    survival branch above the median so both tails keep full precision.
    """

    kind: str = ""
    is_deterministic = False
    gaussian_underlying = False  # Normal/Lognormal: may join a bi-Normal pair

    def cdf(self, x):
        raise NotImplementedError

    def sf(self, x):
        return 1.0 - self.cdf(x)

    def pdf(self, x):
        raise NotImplementedError

    def _ppf_lower(self, p):
        raise NotImplementedError

    def _isf_upper(self, q):
        raise NotImplementedError

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        if np.any((p < 0) | (p > 1)):
            raise DomainError("probability outside [0, 1]")
        out = np.where(p <= 0.5, self._ppf_lower(np.minimum(p, 0.5)),
                       self._isf_upper(np.minimum(1.0 - p, 0.5)))
        return _scalar_or_array(out)

    def median(self):
        return self.quantile(0.5)

    def mode_density(self):
        """Supremum of the pdf, or None when unbounded."""
        return None

    def to_standard(self, x):
        x = np.asarray(x, dtype=float)
        lower = kernels.norm_ppf(self.cdf(x))
        upper = -kernels.norm_ppf(self.sf(x))
        return np.where(self.cdf(x) <= 0.5, lower, upper)

    def from_standard(self, u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            lo = self._ppf_lower(np.minimum(kernels.norm_cdf(u), 0.5))
            hi = self._isf_upper(np.minimum(kernels.norm_cdf(-u), 0.5))
        return np.where(u <= 0.0, lo, hi)

    def to_dict(self) -> dict:
        raise NotImplementedError


def _check_positive(**kw):
    for k, v in kw.items():
        if not (np.isfinite(v) and v > 0):
            raise ValueError(f"{k} must be positive and finite, got {v!r}")


@dataclass(frozen=True)
class Normal(Marginal):
    mean: float
    std: float
    kind = "normal"
    gaussian_underlying = True

    def __post_init__(self):
        _check_positive(std=self.std)

    def cdf(self, x):
        return _scalar_or_array(kernels.norm_cdf((np.asarray(x, float) - self.mean) / self.std))

    def sf(self, x):
        return _scalar_or_array(kernels.norm_cdf((self.mean - np.asarray(x, float)) / self.std))

    def pdf(self, x):
        z = (np.asarray(x, float) - self.mean) / self.std
        return _scalar_or_array(kernels.norm_pdf(z) / self.std)

    def _ppf_lower(self, p):
        return self.mean + self.std * kernels.norm_ppf(p)

    def _isf_upper(self, q):
        return self.mean - self.std * kernels.norm_ppf(q)

    def mode_density(self):
        return 1.0 / (self.std * math.sqrt(2.0 * math.pi))

    def to_standard(self, x):
        return (np.asarray(x, float) - self.mean) / self.std

    def from_standard(self, u):
        return self.mean + self.std * np.asarray(u, float)

    def to_dict(self):
        return {"dist": "normal", "mean": self.mean, "std": self.std}


@dataclass(frozen=True)
class Lognormal(Marginal):
    """Lognormal parameterised by the mean and std of ln X."""

    mean_log: float
    std_log: float
    kind = "lognormal"
    gaussian_underlying = True

    def __post_init__(self):
        _check_positive(std_log=self.std_log)

    def _z(self, x):
        x = np.asarray(x, float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(x > 0, (np.log(np.where(x > 0, x, 1.0)) - self.mean_log) / self.std_log, -np.inf)

    def cdf(self, x):
        return _scalar_or_array(kernels.norm_cdf(self._z(x)))

    def sf(self, x):
        return _scalar_or_array(kernels.norm_cdf(-self._z(x)))

    def pdf(self, x):
        x = np.asarray(x, float)
        z = self._z(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(x > 0, kernels.norm_pdf(z) / (self.std_log * np.where(x > 0, x, 1.0)), 0.0)
        return _scalar_or_array(out)

    def _ppf_lower(self, p):
        return np.exp(self.mean_log + self.std_log * kernels.norm_ppf(p))

    def _isf_upper(self, q):
        return np.exp(self.mean_log - self.std_log * kernels.norm_ppf(q))

    def mode_density(self):
        mode = math.exp(self.mean_log - self.std_log ** 2)
        return float(self.pdf(mode))

    def to_standard(self, x):
        x = np.asarray(x, float)
        if np.any(x <= 0):
            raise DomainError("lognormal value must be positive")
        return (np.log(x) - self.mean_log) / self.std_log

    def from_standard(self, u):
        return np.exp(self.mean_log + self.std_log * np.asarray(u, float))

    def to_dict(self):
        return {"dist": "lognormal", "mean_log": self.mean_log, "std_log": self.std_log}


@dataclass(frozen=True)
class Weibull(Marginal):
    """Two-parameter Weibull, F(x) = 1 - exp[-(x/scale)^shape]."""

    shape: float
    scale: float
    kind = "weibull"

    def __post_init__(self):
        _check_positive(shape=self.shape, scale=self.scale)

    def _t(self, x):
        x = np.maximum(np.asarray(x, float), 0.0)
        return (x / self.scale) ** self.shape

    def cdf(self, x):
        return _scalar_or_array(-np.expm1(-self._t(x)))

    def sf(self, x):
        return _scalar_or_array(np.exp(-self._t(x)))

    def pdf(self, x):
        x = np.asarray(x, float)
        xp = np.maximum(x, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self.shape / self.scale * (xp / self.scale) ** (self.shape - 1) * np.exp(-self._t(xp))
        return _scalar_or_array(np.where(x >= 0, out, 0.0))

    def _ppf_lower(self, p):
        return self.scale * (-np.log1p(-p)) ** (1.0 / self.shape)

    def _isf_upper(self, q):
        return self.scale * (-np.log(q)) ** (1.0 / self.shape)

    def mode_density(self):
        if self.shape < 1:
            return None
        if self.shape == 1:
            return 1.0 / self.scale
        mode = self.scale * ((self.shape - 1) / self.shape) ** (1 / self.shape)
        return float(self.pdf(mode))

    def to_standard(self, x):
        x = np.asarray(x, float)
        if np.any(x < 0):
            raise DomainError("Weibull value must be nonnegative")
        return super().to_standard(x)

    def to_dict(self):
        return {"dist": "weibull", "shape": self.shape, "scale": self.scale}


@dataclass(frozen=True)
class Exponential(Marginal):
    mean: float
    kind = "exponential"

    def __post_init__(self):
        _check_positive(mean=self.mean)

    def cdf(self, x):
        x = np.maximum(np.asarray(x, float), 0.0)
        return _scalar_or_array(-np.expm1(-x / self.mean))

    def sf(self, x):
        x = np.maximum(np.asarray(x, float), 0.0)
        return _scalar_or_array(np.exp(-x / self.mean))

    def pdf(self, x):
        x = np.asarray(x, float)
        return _scalar_or_array(np.where(x >= 0, np.exp(-np.maximum(x, 0) / self.mean) / self.mean, 0.0))

    def _ppf_lower(self, p):
        return -self.mean * np.log1p(-p)

    def _isf_upper(self, q):
        return -self.mean * np.log(q)

    def mode_density(self):
        return 1.0 / self.mean

    def to_standard(self, x):
        x = np.asarray(x, float)
        if np.any(x < 0):
            raise DomainError("exponential value must be nonnegative")
        return super().to_standard(x)

    def to_dict(self):
        return {"dist": "exponential", "mean": self.mean}


@dataclass(frozen=True)
class Deterministic(Marginal):
    value: float
    kind = "deterministic"
    is_deterministic = True

    def cdf(self, x):
        return _scalar_or_array(np.where(np.asarray(x, float) >= self.value, 1.0, 0.0))

    def pdf(self, x):
        raise ValueError("a deterministic variable has no density")

    def quantile(self, p):
        p = np.asarray(p, float)
        if np.any((p < 0) | (p > 1)):
            raise DomainError("probability outside [0, 1]")
        return _scalar_or_array(np.full_like(p, self.value))

    def to_dict(self):
        return {"dist": "deterministic", "value": self.value}


@dataclass(frozen=True)
class ProbabilisticModel:
    """Ordered named marginals plus optional bi-Normal correlation pairs.

    Random (non-deterministic) variables each own one standard-normal
    coordinate, in declaration order.  A correlated pair (a, b, rho) acts on
    the underlying Gaussian variables: z_a = u_a, z_b = rho u_a + sqrt(1-rho^2) u_b.
    """

    variables: tuple = ()
    correlations: tuple = ()
    _pairs: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple((str(n), m) for n, m in self.variables))
        object.__setattr__(self, "correlations", tuple((str(a), str(b), float(r)) for a, b, r in self.correlations))
        names = [n for n, _ in self.variables]
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise ValueError(f"duplicate variable names: {dup}")
        lookup = dict(self.variables)
        seen: set[str] = set()
        pairs = {}
        for a, b, rho in self.correlations:
            for n in (a, b):
                if n not in lookup:
                    raise ValueError(f"correlation references unknown variable {n!r}")
                if not lookup[n].gaussian_underlying:
                    raise ValueError(f"correlation on {n!r}: only Normal/Lognormal variables may be correlated")
                if n in seen:
                    raise ValueError(f"variable {n!r} appears in more than one correlation pair")
            if a == b:
                raise ValueError("correlation needs two distinct variables")
            if not abs(rho) < 1:
                raise ValueError(f"|rho| must be < 1, got {rho}")
            seen.update((a, b))
            pairs[(a, b)] = rho
        object.__setattr__(self, "_pairs", pairs)

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.variables]

    @property
    def random_names(self) -> list[str]:
        return [n for n, m in self.variables if not m.is_deterministic]

    @property
    def dim(self) -> int:
        return len(self.random_names)

    def marginal(self, name: str) -> Marginal:
        for n, m in self.variables:
            if n == name:
                return m
        raise KeyError(name)

    def extended(self, extra: Sequence[tuple[str, Marginal]]) -> "ProbabilisticModel":
        return ProbabilisticModel(self.variables + tuple(extra), self.correlations)

    def medians(self) -> dict[str, float]:
        return {n: float(m.median()) for n, m in self.variables}

    def to_standard(self, x: Mapping[str, object]) -> np.ndarray:
        """Physical values (mapping name -> scalar/array) to u with trailing axis = dim."""
        idx = {n: i for i, n in enumerate(self.random_names)}
        cols = []
        for n in self.random_names:
            if n not in x:
                raise KeyError(f"missing value for variable {n!r}")
            cols.append(np.asarray(self.marginal(n).to_standard(x[n]), float))
        cols = list(np.broadcast_arrays(*cols)) if cols else []
        for (a, b), rho in self._pairs.items():
            za, zb = cols[idx[a]], cols[idx[b]]
            cols[idx[b]] = (zb - rho * za) / math.sqrt(1.0 - rho * rho)
        if not cols:
            return np.zeros((0,))
        return np.stack(cols, axis=-1)

    def from_standard(self, u) -> dict[str, np.ndarray]:
        """Inverse of :meth:`to_standard`; deterministic variables come back as scalars."""
        u = np.asarray(u, float)
        if u.shape[-1] != self.dim:
            raise ValueError(f"expected trailing dimension {self.dim}, got {u.shape[-1]}")
        idx = {n: i for i, n in enumerate(self.random_names)}
        z = [u[..., i] for i in range(self.dim)]
        for (a, b), rho in self._pairs.items():
            z[idx[b]] = rho * u[..., idx[a]] + math.sqrt(1.0 - rho * rho) * u[..., idx[b]]
        out = {}
        for n, m in self.variables:
            out[n] = m.value if m.is_deterministic else m.from_standard(z[idx[n]])
        return out

    def sample_standard(self, seed: int, count: int, start: int = 0, stream: int = 0) -> np.ndarray:
        return standard_normal_rows(seed, start, count, self.dim, stream=stream)

    def sample(self, seed: int, count: int, start: int = 0) -> dict[str, np.ndarray]:
        if count < 1:
            raise ValueError("count must be >= 1")
        return self.from_standard(self.sample_standard(seed, count, start))


def to_standard_normal(model: ProbabilisticModel, x: Mapping[str, object]) -> np.ndarray:
    return model.to_standard(x)


def from_standard_normal(model: ProbabilisticModel, u) -> dict[str, np.ndarray]:
    return model.from_standard(u)


def sample(model: ProbabilisticModel, seed: int, count: int) -> dict[str, np.ndarray]:
    """Draw ``count`` physical samples; row i depends only on (seed, i)."""
    return model.sample(seed, count)
