"""Pure-numpy simplex iteration kernel.

Same contract as the compiled ``_simplex_c.iterate``; used when the
extension is not built or when ``COUPLED_IGDT_BACKEND=python``.
"""
import numpy as np

OPTIMAL, UNBOUNDED, PAUSED = 0, 1, 2
AT_LOWER, AT_UPPER, AT_ZERO, BASIC = 0, 1, 2, 3


def iterate(indptr, indices, data, c, lb, ub, x, status, basis, binv,
            max_iter, feas_tol, opt_tol, piv_tol, bland_after, streak):
    """Run up to ``max_iter`` bounded primal simplex iterations in place.

    ``indptr, indices, data`` hold the (m, n) equality matrix (zero
    right-hand side) in compressed-column form, ``basis[p]`` is the column
    basic in row position ``p`` and ``binv`` the explicit basis inverse.
    Returns ``(code, iterations, streak)``.
    """
    m, n = binv.shape[0], c.size
    colidx = np.repeat(np.arange(n), np.diff(indptr))
    movable = ub > lb
    for it in range(max_iter):
        y = c[basis] @ binv
        d = c - np.bincount(colidx, weights=data * y[indices], minlength=n)
        cand = movable & (
            ((status == AT_LOWER) & (d < -opt_tol))
            | ((status == AT_UPPER) & (d > opt_tol))
            | ((status == AT_ZERO) & (np.abs(d) > opt_tol))
        )
        idx = np.flatnonzero(cand)
        if idx.size == 0:
            return OPTIMAL, it, streak
        bland = streak >= bland_after
        if bland:
            q = int(idx[0])
        else:
            q = int(idx[np.argmax(np.abs(d[idx]))])
        direction = 1.0 if d[q] < 0.0 else -1.0

        s, e = indptr[q], indptr[q + 1]
        alpha = binv[:, indices[s:e]] @ data[s:e]
        a = direction * alpha
        xb = x[basis]
        lbb = lb[basis]
        ubb = ub[basis]
        dec = a > piv_tol
        inc = a < -piv_tol
        lim = np.full(m, np.inf)
        with np.errstate(invalid="ignore"):
            lim[dec] = (xb[dec] - lbb[dec]) / a[dec]
            lim[inc] = (ubb[inc] - xb[inc]) / -a[inc]
        np.maximum(lim, 0.0, out=lim)

        p = -1
        if bland:
            theta = lim.min() if m else np.inf
            if theta < np.inf:
                ties = np.flatnonzero(lim <= theta)
                p = int(ties[np.argmin(basis[ties])])
        else:
            relaxed = np.full(m, np.inf)
            relaxed[dec] = (xb[dec] - lbb[dec] + feas_tol) / a[dec]
            relaxed[inc] = (ubb[inc] - xb[inc] + feas_tol) / -a[inc]
            theta_h = relaxed.min() if m else np.inf
            if theta_h < np.inf:
                ok = np.flatnonzero(lim <= theta_h)
                p = int(ok[np.argmax(np.abs(a[ok]))])
        theta = lim[p] if p >= 0 else np.inf

        span = ub[q] - lb[q]
        if status[q] != AT_ZERO and span <= theta:
            theta = span
            p = -1
        if theta == np.inf:
            return UNBOUNDED, it, streak

        streak = streak + 1 if theta <= feas_tol else 0
        if p < 0:
            x[q] = ub[q] if status[q] == AT_LOWER else lb[q]
            status[q] = AT_UPPER if status[q] == AT_LOWER else AT_LOWER
            x[basis] = xb - theta * a
            continue

        x[basis] = xb - theta * a
        x[q] += direction * theta
        leave = basis[p]
        if a[p] > 0.0:
            x[leave] = lbb[p]
            status[leave] = AT_LOWER
        else:
            x[leave] = ubb[p]
            status[leave] = AT_UPPER
        basis[p] = q
        status[q] = BASIC
        row = binv[p] / alpha[p]
        binv -= np.outer(alpha, row)
        binv[p] = row
    return PAUSED, max_iter, streak
