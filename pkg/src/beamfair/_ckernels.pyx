# Compiled counterpart of _pykernels.py; keep the two in sync.
import numpy as np
cimport numpy as cnp
from libc.math cimport log1p, fabs, INFINITY

cnp.import_array()

cdef double LN2 = 0.6931471805599453


cdef void _best_ratio(const double[:, ::1] serving, const double[:, ::1] interf,
                      double noise, const double[::1] p,
                      double[::1] q, long long[::1] arg) noexcept nogil:
    cdef Py_ssize_t n, m, k
    cdef Py_ssize_t N = serving.shape[0]
    cdef Py_ssize_t M = serving.shape[1]
    cdef double acc, r, best
    cdef long long ibest
    for n in range(N):
        best = -INFINITY
        ibest = 0
        for m in range(M):
            acc = 0.0
            for k in range(N):
                if k != n:
                    acc += p[k] * interf[k, m]
            r = serving[n, m] / (acc + noise)
            if r > best:
                best = r
                ibest = m
        q[n] = best
        arg[n] = ibest


cdef void _apply_T(const double[:, ::1] serving, const double[:, ::1] interf,
                   const double[::1] ifr, double bandwidth, double noise,
                   const double[::1] p, double[::1] out,
                   double[::1] q, long long[::1] arg) noexcept nogil:
    cdef Py_ssize_t n
    cdef double scale
    _best_ratio(serving, interf, noise, p, q, arg)
    for n in range(p.shape[0]):
        scale = ifr[n] * LN2 / bandwidth
        if p[n] > 0.0:
            out[n] = scale * p[n] / log1p(p[n] * q[n])
        else:
            out[n] = scale / q[n]


def interference(const double[:, ::1] interf, const double[::1] p):
    cdef Py_ssize_t N = interf.shape[0]
    cdef Py_ssize_t M = interf.shape[1]
    cdef Py_ssize_t n, m, k
    cdef double acc
    out = np.empty((N, M), dtype=np.float64)
    cdef double[:, ::1] ov = out
    with nogil:
        for n in range(N):
            for m in range(M):
                acc = 0.0
                for k in range(N):
                    if k != n:
                        acc += p[k] * interf[k, m]
                ov[n, m] = acc
    return out


def best_ratio(const double[:, ::1] serving, const double[:, ::1] interf,
               double noise, const double[::1] p):
    cdef Py_ssize_t N = serving.shape[0]
    q = np.empty(N, dtype=np.float64)
    arg = np.empty(N, dtype=np.int64)
    cdef double[::1] qv = q
    cdef long long[::1] av = arg
    with nogil:
        _best_ratio(serving, interf, noise, p, qv, av)
    return q, arg


def rates(const double[:, ::1] serving, const double[:, ::1] interf,
          double bandwidth, double noise, const double[::1] p):
    cdef Py_ssize_t N = serving.shape[0]
    cdef Py_ssize_t n
    q = np.empty(N, dtype=np.float64)
    arg = np.empty(N, dtype=np.int64)
    out = np.empty(N, dtype=np.float64)
    cdef double[::1] qv = q
    cdef long long[::1] av = arg
    cdef double[::1] ov = out
    with nogil:
        _best_ratio(serving, interf, noise, p, qv, av)
        for n in range(N):
            ov[n] = bandwidth * log1p(p[n] * qv[n]) / LN2
    return out, arg


def apply_T(const double[:, ::1] serving, const double[:, ::1] interf,
            const double[::1] ifr, double bandwidth, double noise,
            const double[::1] p):
    cdef Py_ssize_t N = serving.shape[0]
    out = np.empty(N, dtype=np.float64)
    q = np.empty(N, dtype=np.float64)
    arg = np.empty(N, dtype=np.int64)
    cdef double[::1] ov = out
    cdef double[::1] qv = q
    cdef long long[::1] av = arg
    with nogil:
        _apply_T(serving, interf, ifr, bandwidth, noise, p, ov, qv, av)
    return out, arg


def fixed_point(const double[:, ::1] serving, const double[:, ::1] interf,
                const double[::1] ifr, double bandwidth, double noise,
                double budget, p0, double tol, Py_ssize_t max_iter):
    cdef Py_ssize_t N = serving.shape[0]
    cdef Py_ssize_t n, k = 0
    cdef double norm, step, residual = INFINITY, scale
    cdef bint converged = False
    x = np.array(p0, dtype=np.float64, copy=True)
    t = np.empty(N, dtype=np.float64)
    q = np.empty(N, dtype=np.float64)
    arg = np.empty(N, dtype=np.int64)
    history = np.empty(max_iter, dtype=np.float64)
    cdef double[::1] xv = x
    cdef double[::1] tv = t
    cdef double[::1] qv = q
    cdef long long[::1] av = arg
    cdef double[::1] hv = history
    with nogil:
        while k < max_iter:
            _apply_T(serving, interf, ifr, bandwidth, noise, xv, tv, qv, av)
            norm = tv[0]
            for n in range(1, N):
                if tv[n] > norm:
                    norm = tv[n]
            scale = budget / norm
            residual = 0.0
            for n in range(N):
                step = fabs(scale * tv[n] - xv[n])
                if step > residual:
                    residual = step
                xv[n] = scale * tv[n]
            hv[k] = residual
            k += 1
            if residual <= tol * budget:
                converged = True
                break
        _apply_T(serving, interf, ifr, bandwidth, noise, xv, tv, qv, av)
        norm = tv[0]
        for n in range(1, N):
            if tv[n] > norm:
                norm = tv[n]
    return x, budget / norm, k, residual, bool(converged), history[:k].copy()
