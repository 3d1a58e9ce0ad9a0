"""Pure numpy implementations of the numerical kernels.

These mirror ``_kernels.pyx`` function for function and are used when the
compiled extension is unavailable (or when ``RELUP_PURE_PYTHON=1``).
"""
import numpy as np
from scipy.special import erfc

_SQRT1_2 = 0.7071067811865475244
_INV_SQRT_2PI = 0.3989422804014326779

# Wichura (1988), algorithm AS 241 (PPND16), coefficients lowest order first.
_A = (3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4, 2.5090809287301226727e3)
_B = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
      2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
      5.2264952788528545610e3)
_C = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
      1.05075007164441684324e-9)
_E = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
      2.04426310338993978564e-15)


def _poly(coef, x):
    out = np.full_like(x, coef[-1])
    for c in coef[-2::-1]:
        out = out * x + c
    return out


def norm_cdf(x):
    x = np.asarray(x, dtype=float)
    return 0.5 * erfc(-x * _SQRT1_2)


def norm_pdf(x):
    x = np.asarray(x, dtype=float)
    return _INV_SQRT_2PI * np.exp(-0.5 * x * x)


def _ppf_lower(p):
    # p in (0, 0.5]
    q = p - 0.5
    x = np.empty_like(p)
    central = np.abs(q) <= 0.425
    if central.any():
        qc = q[central]
        r = 0.180625 - qc * qc
        x[central] = qc * _poly(_A, r) / _poly(_B, r)
    tail = ~central
    if tail.any():
        r = np.sqrt(-np.log(p[tail]))
        xt = np.empty_like(r)
        near = r <= 5.0
        rn = r[near] - 1.6
        xt[near] = _poly(_C, rn) / _poly(_D, rn)
        rf = r[~near] - 5.0
        xt[~near] = _poly(_E, rf) / _poly(_F, rf)
        x[tail] = -xt
    # one Newton step against the erfc-based cdf
    dens = norm_pdf(x)
    ok = dens > 0.0
    x[ok] -= (norm_cdf(x[ok]) - p[ok]) / dens[ok]
    return x


def norm_ppf(p):
    p = np.asarray(p, dtype=float)
    shape = p.shape
    p = p.ravel()
    out = np.empty_like(p)
    lo = (p > 0.0) & (p <= 0.5)
    hi = (p > 0.5) & (p < 1.0)
    if lo.any():
        out[lo] = _ppf_lower(p[lo])
    if hi.any():
        out[hi] = -_ppf_lower(1.0 - p[hi])
    out[p == 0.0] = -np.inf
    out[p == 1.0] = np.inf
    out[np.isnan(p)] = np.nan
    return out.reshape(shape)


def crack_size(a0, dS, lnC, m, n):
    a0, dS, lnC, m = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a0, dS, lnC, m)))
    e = 1.0 - 0.5 * m
    c = np.exp(lnC)
    ds = np.maximum(dS, 0.0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        growth = c * ds ** m * np.pi ** (0.5 * m) * n
        bracket = e * growth + a0 ** e
        a = np.where(bracket > 0.0, bracket ** (1.0 / e), np.inf)
        two = m == 2.0
        if two.any():
            a = np.where(two, a0 * np.exp(c * ds * ds * np.pi * n), a)
    if n == 0:
        a = np.array(a0, dtype=float, copy=True)
    return a


def equivalent_lsf(u, cl, floor, ceil):
    u = np.asarray(u, dtype=float)
    cl = np.asarray(cl, dtype=float)
    n_floor = int(np.count_nonzero(cl < floor))
    n_over = int(np.count_nonzero(cl > 1.0))
    h = u - norm_ppf(np.clip(cl, floor, ceil))
    return h, n_floor, n_over
