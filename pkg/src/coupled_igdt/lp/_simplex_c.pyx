# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled simplex iteration kernel.

Mirrors ``_simplex_py.iterate`` loop for loop; the GIL is released for the
whole iteration so concurrent solves in threads do not serialize.
"""
from libc.math cimport fabs, INFINITY

cdef enum:
    OPTIMAL = 0
    UNBOUNDED = 1
    PAUSED = 2
    AT_LOWER = 0
    AT_UPPER = 1
    AT_ZERO = 2
    BASIC = 3


def iterate(long long[::1] indptr, long long[::1] indices, double[::1] data,
            double[::1] c, double[::1] lb, double[::1] ub,
            double[::1] x, signed char[::1] status, long long[::1] basis,
            double[:, ::1] binv, long max_iter, double feas_tol, double opt_tol,
            double piv_tol, long bland_after, long streak):
    cdef Py_ssize_t m = binv.shape[0]
    cdef Py_ssize_t n = c.shape[0]
    cdef double[::1] y = _empty(m)
    cdef double[::1] d = _empty(n)
    cdef double[::1] alpha = _empty(m)
    cdef double[::1] row = _empty(m)
    cdef long it
    cdef int code = PAUSED
    with nogil:
        code = _run(indptr, indices, data, c, lb, ub, x, status, basis, binv, y, d, alpha, row,
                    m, n, max_iter, feas_tol, opt_tol, piv_tol, bland_after,
                    &streak, &it)
    return code, it, streak


cdef double[::1] _empty(Py_ssize_t k):
    import numpy as np
    return np.zeros(max(k, 1), dtype=np.float64)


cdef int _run(long long[::1] indptr, long long[::1] indices, double[::1] data, double[::1] c, double[::1] lb, double[::1] ub,
              double[::1] x, signed char[::1] status, long long[::1] basis,
              double[:, ::1] binv, double[::1] y, double[::1] d,
              double[::1] alpha, double[::1] row, Py_ssize_t m, Py_ssize_t n,
              long max_iter, double feas_tol, double opt_tol, double piv_tol,
              long bland_after, long* streak, long* it_out) noexcept nogil:
    cdef Py_ssize_t i, j, k, p, q, leave
    cdef long it
    cdef double best, dj, direction, theta, theta_h, lim, rel, ai, piv, span, absbest, cb, v
    cdef bint bland, cand
    cdef signed char st
    # duals y = c_B^T B^-1, afterwards updated with each pivot
    for j in range(m):
        y[j] = 0.0
    for p in range(m):
        cb = c[basis[p]]
        if cb != 0.0:
            for j in range(m):
                y[j] += cb * binv[p, j]
    for it in range(max_iter):
        # reduced costs d = c - y^T M over column nonzeros
        for j in range(n):
            dj = c[j]
            for k in range(indptr[j], indptr[j + 1]):
                dj -= y[indices[k]] * data[k]
            d[j] = dj

        bland = streak[0] >= bland_after
        q = -1
        best = 0.0
        for j in range(n):
            if not (ub[j] > lb[j]):
                continue
            st = status[j]
            dj = d[j]
            cand = ((st == AT_LOWER and dj < -opt_tol) or (st == AT_UPPER and dj > opt_tol)
                    or (st == AT_ZERO and fabs(dj) > opt_tol))
            if cand:
                if bland:
                    q = j
                    break
                if fabs(dj) > best:
                    best = fabs(dj)
                    q = j
        if q < 0:
            it_out[0] = it
            return OPTIMAL
        direction = 1.0 if d[q] < 0.0 else -1.0

        for i in range(m):
            alpha[i] = 0.0
        for k in range(indptr[q], indptr[q + 1]):
            i = indices[k]
            v = data[k]
            for p in range(m):
                alpha[p] += binv[p, i] * v

        p = -1
        theta = INFINITY
        if bland:
            for i in range(m):
                ai = direction * alpha[i]
                if ai > piv_tol:
                    lim = (x[basis[i]] - lb[basis[i]]) / ai
                elif ai < -piv_tol:
                    lim = (ub[basis[i]] - x[basis[i]]) / -ai
                else:
                    continue
                if lim < 0.0:
                    lim = 0.0
                if lim < theta or (lim == theta and p >= 0 and basis[i] < basis[p]):
                    theta = lim
                    p = i
        else:
            theta_h = INFINITY
            for i in range(m):
                ai = direction * alpha[i]
                if ai > piv_tol:
                    rel = (x[basis[i]] - lb[basis[i]] + feas_tol) / ai
                elif ai < -piv_tol:
                    rel = (ub[basis[i]] - x[basis[i]] + feas_tol) / -ai
                else:
                    continue
                if rel < theta_h:
                    theta_h = rel
            if theta_h < INFINITY:
                absbest = -1.0
                for i in range(m):
                    ai = direction * alpha[i]
                    if ai > piv_tol:
                        lim = (x[basis[i]] - lb[basis[i]]) / ai
                    elif ai < -piv_tol:
                        lim = (ub[basis[i]] - x[basis[i]]) / -ai
                    else:
                        continue
                    if lim < 0.0:
                        lim = 0.0
                    if lim <= theta_h and fabs(ai) > absbest:
                        absbest = fabs(ai)
                        theta = lim
                        p = i

        span = ub[q] - lb[q]
        if status[q] != AT_ZERO and span <= theta:
            theta = span
            p = -1
        if theta == INFINITY:
            it_out[0] = it
            return UNBOUNDED

        if theta <= feas_tol:
            streak[0] += 1
        else:
            streak[0] = 0

        for i in range(m):
            x[basis[i]] -= theta * direction * alpha[i]
        if p < 0:
            if status[q] == AT_LOWER:
                x[q] = ub[q]
                status[q] = AT_UPPER
            else:
                x[q] = lb[q]
                status[q] = AT_LOWER
            continue

        x[q] += direction * theta
        leave = basis[p]
        if direction * alpha[p] > 0.0:
            x[leave] = lb[leave]
            status[leave] = AT_LOWER
        else:
            x[leave] = ub[leave]
            status[leave] = AT_UPPER
        basis[p] = q
        status[q] = BASIC

        piv = alpha[p]
        for j in range(m):
            row[j] = binv[p, j] / piv
        for i in range(m):
            ai = alpha[i]
            if i != p and ai != 0.0:
                for j in range(m):
                    binv[i, j] -= ai * row[j]
        for j in range(m):
            binv[p, j] = row[j]
        v = d[q]
        for j in range(m):
            y[j] += v * row[j]
    it_out[0] = max_iter
    return PAUSED
