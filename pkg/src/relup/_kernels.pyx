# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled numerical kernels.

Function-for-function twin of ``_kernels_py``; both are exercised by the
test suite and compared in ``benchmarks/bench_kernels.py``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport erfc, exp, log, sqrt, pow, fabs, INFINITY, NAN, isnan, M_PI

cnp.import_array()

cdef double SQRT1_2 = 0.7071067811865475244
cdef double INV_SQRT_2PI = 0.3989422804014326779
cdef double HALF_LOG_PI = 0.5723649429247000870717

cdef double[8] A = [3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
                    1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
                    3.3430575583588128105e4, 2.5090809287301226727e3]
cdef double[8] B = [1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
                    2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
                    5.2264952788528545610e3]
cdef double[8] C = [1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
                    3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
                    2.27238449892691845833e-2, 7.74545014278341407640e-4]
cdef double[8] D = [1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
                    1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
                    1.05075007164441684324e-9]
cdef double[8] E = [6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
                    2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
                    2.71155556874348757815e-5, 2.01033439929228813265e-7]
cdef double[8] F = [1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
                    7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
                    2.04426310338993978564e-15]


cdef inline double _poly(double* c, double x) nogil:
    cdef double out = c[7]
    cdef int i
    for i in range(6, -1, -1):
        out = out * x + c[i]
    return out


cdef inline double _cdf(double x) nogil:
    return 0.5 * erfc(-x * SQRT1_2)


cdef inline double _pdf(double x) nogil:
    return INV_SQRT_2PI * exp(-0.5 * x * x)


cdef double _ppf_lower(double p) nogil:
    cdef double q = p - 0.5, r, x, dens
    if fabs(q) <= 0.425:
        r = 0.180625 - q * q
        x = q * _poly(A, r) / _poly(B, r)
    else:
        r = sqrt(-log(p))
        if r <= 5.0:
            r -= 1.6
            x = -_poly(C, r) / _poly(D, r)
        else:
            r -= 5.0
            x = -_poly(E, r) / _poly(F, r)
    dens = _pdf(x)
    if dens > 0.0:
        x -= (_cdf(x) - p) / dens
    return x


cdef inline double _ppf(double p) nogil:
    if isnan(p):
        return NAN
    if p <= 0.0:
        return -INFINITY
    if p >= 1.0:
        return INFINITY
    if p <= 0.5:
        return _ppf_lower(p)
    return -_ppf_lower(1.0 - p)


def norm_cdf(x):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xs = np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(xs)
    cdef Py_ssize_t i, n = xs.shape[0]
    with nogil:
        for i in range(n):
            out[i] = _cdf(xs[i])
    return out.reshape(np.shape(x))


def norm_pdf(x):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xs = np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(xs)
    cdef Py_ssize_t i, n = xs.shape[0]
    with nogil:
        for i in range(n):
            out[i] = _pdf(xs[i])
    return out.reshape(np.shape(x))


def norm_ppf(p):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ps = np.ascontiguousarray(p, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(ps)
    cdef Py_ssize_t i, n = ps.shape[0]
    with nogil:
        for i in range(n):
            out[i] = _ppf(ps[i])
    return out.reshape(np.shape(p))


def crack_size(a0, dS, lnC, m, double n):
    b = np.broadcast_arrays(*(np.asarray(v, dtype=np.float64) for v in (a0, dS, lnC, m)))
    shape = b[0].shape
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xa = np.ascontiguousarray(b[0]).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xs = np.ascontiguousarray(b[1]).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xc = np.ascontiguousarray(b[2]).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xm = np.ascontiguousarray(b[3]).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(xa)
    cdef Py_ssize_t i, k = xa.shape[0]
    cdef double e, ds, bracket, mm
    with nogil:
        for i in range(k):
            if n == 0.0:
                out[i] = xa[i]
                continue
            mm = xm[i]
            ds = xs[i] if xs[i] > 0.0 else 0.0
            if mm == 2.0:
                out[i] = xa[i] * exp(exp(xc[i]) * ds * ds * M_PI * n)
                continue
            e = 1.0 - 0.5 * mm
            # log space: two exp/log pairs are cheaper than three pow calls
            bracket = e * exp(xc[i] + mm * (log(ds) + HALF_LOG_PI)) * n + exp(e * log(xa[i]))
            if bracket > 0.0:
                out[i] = exp(log(bracket) / e)
            else:
                out[i] = INFINITY
    return out.reshape(shape)


def equivalent_lsf(u, cl, double floor, double ceil):
    bu, bc = np.broadcast_arrays(np.asarray(u, dtype=np.float64), np.asarray(cl, dtype=np.float64))
    shape = bu.shape
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xu = np.ascontiguousarray(bu).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xl = np.ascontiguousarray(bc).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(xu)
    cdef Py_ssize_t i, k = xu.shape[0]
    cdef Py_ssize_t n_floor = 0, n_over = 0
    cdef double v
    with nogil:
        for i in range(k):
            v = xl[i]
            if v < floor:
                n_floor += 1
                v = floor
            elif v > 1.0:
                n_over += 1
                v = ceil
            elif v > ceil:
                v = ceil
            out[i] = xu[i] - _ppf(v)
    return out.reshape(shape), int(n_floor), int(n_over)
