"""Minimal compressed-sparse-column matrix for the simplex driver."""
from __future__ import annotations

import numpy as np

DENSE_BELOW = 1000  # rows; crossover of the block-triangular inverse on one core


class Csc:
    """Column-compressed ``(m, n)`` matrix with summed duplicates and no zeros."""

    def __init__(self, indptr, indices, data, shape):
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)
        self.data = np.ascontiguousarray(data, dtype=float)
        self.shape = tuple(shape)
        self.colidx = np.repeat(np.arange(self.shape[1], dtype=np.int64), np.diff(self.indptr))

    @classmethod
    def from_triplets(cls, rows, cols, vals, shape) -> "Csc":
        m, n = shape
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=float)
        key, inv = np.unique(cols * max(m, 1) + rows, return_inverse=True)
        summed = np.bincount(inv.ravel(), weights=vals, minlength=key.size)
        keep = summed != 0.0
        key, summed = key[keep], summed[keep]
        c, r = np.divmod(key, max(m, 1))
        indptr = np.concatenate([[0], np.cumsum(np.bincount(c, minlength=n))])
        return cls(indptr, r, summed, shape)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return np.bincount(self.indices, weights=self.data * x[self.colidx], minlength=self.shape[0])

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        """``y @ M``."""
        return np.bincount(self.colidx, weights=self.data * y[self.indices], minlength=self.shape[1])

    def column(self, j: int):
        s, e = self.indptr[j], self.indptr[j + 1]
        return self.indices[s:e], self.data[s:e]

    def dense_columns(self, cols) -> np.ndarray:
        cols = np.asarray(cols, dtype=np.int64)
        out = np.zeros((self.shape[0], cols.size))
        counts = self.indptr[cols + 1] - self.indptr[cols]
        pos = np.repeat(np.arange(cols.size), counts)
        start = np.repeat(self.indptr[cols] - np.concatenate([[0], np.cumsum(counts)[:-1]]), counts)
        take = start + np.arange(counts.sum())
        out[self.indices[take], pos] = self.data[take]
        return out

    def row_nonempty(self) -> np.ndarray:
        return np.bincount(self.indices, minlength=self.shape[0]) > 0

    def select_rows(self, rows) -> "Csc":
        """Keep ``rows`` (sorted), renumbered 0..k-1."""
        new = np.full(self.shape[0], -1, dtype=np.int64)
        new[rows] = np.arange(len(rows))
        keep = new[self.indices] >= 0
        counts = np.bincount(self.colidx[keep], minlength=self.shape[1])
        indptr = np.concatenate([[0], np.cumsum(counts)])
        return Csc(indptr, new[self.indices[keep]], self.data[keep], (len(rows), self.shape[1]))

    def hstack_unit(self, rows, signs) -> "Csc":
        """Append one column per ``(rows[k], signs[k])`` unit entry."""
        rows = np.asarray(rows, dtype=np.int64)
        k = rows.size
        indptr = np.concatenate([self.indptr, self.indptr[-1] + np.arange(1, k + 1)])
        return Csc(indptr, np.concatenate([self.indices, rows]),
                   np.concatenate([self.data, np.asarray(signs, dtype=float)]), (self.shape[0], self.shape[1] + k))


def _matching(m, row_ptr, row_cols, col_ptr, col_rows):
    """Row-to-column perfect matching of a square sparsity pattern (or None)."""
    match_row = np.full(m, -1, dtype=np.int64)  # row -> column
    match_col = np.full(m, -1, dtype=np.int64)  # column -> row
    # cheap pass: columns in order of increasing degree grab a free row
    for j in np.argsort(np.diff(col_ptr), kind="stable"):
        for i in col_rows[col_ptr[j]:col_ptr[j + 1]]:
            if match_row[i] < 0:
                match_row[i], match_col[j] = j, i
                break
    stamp = np.full(m, -1, dtype=np.int64)
    for j0 in np.flatnonzero(match_col < 0):
        # iterative augmenting-path search from column j0
        stack = [(j0, col_ptr[j0])]
        parent = {j0: -1}
        found = -1
        stamp_id = j0
        while stack and found < 0:
            j, k = stack[-1]
            if k >= col_ptr[j + 1]:
                stack.pop()
                continue
            stack[-1] = (j, k + 1)
            i = col_rows[k]
            if stamp[i] == stamp_id:
                continue
            stamp[i] = stamp_id
            if match_row[i] < 0:
                found = i
                break
            nxt = match_row[i]
            parent[nxt] = (j, i)
            stack.append((nxt, col_ptr[nxt]))
        if found < 0:
            return None
        # flip the path back to j0
        i, j = found, stack[-1][0]
        while True:
            prev_row = match_col[j]
            match_row[i], match_col[j] = j, i
            if j == j0:
                break
            j, i = parent[j][0], prev_row
    return match_col


def _components(m, row_ptr, row_cols, match_col):
    """Strongly connected components (Tarjan, iterative) in dependency order.

    Node ``i`` is equation row ``i``; it depends on the row matched to every
    column appearing in it.
    """
    row_of = match_col  # column -> row
    index = np.full(m, -1, dtype=np.int64)
    low = np.zeros(m, dtype=np.int64)
    on_stack = np.zeros(m, dtype=bool)
    stack, comps, counter = [], [], 0
    for root in range(m):
        if index[root] >= 0:
            continue
        work = [(root, row_ptr[root])]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, k = work[-1]
            if k < row_ptr[v + 1]:
                work[-1] = (v, k + 1)
                w = row_of[row_cols[k]]
                if w == v:
                    continue
                if index[w] < 0:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, row_ptr[w]))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(comp)
    return comps


def inverse(M: Csc, cols) -> np.ndarray:
    """Dense inverse of the square submatrix ``M[:, cols]``.

    Large matrices are permuted to block-triangular form (perfect matching,
    then strongly connected components) so only the irreducible diagonal
    blocks are factored densely; below ``DENSE_BELOW`` rows a plain dense
    inverse is cheaper. Raises ``numpy.linalg.LinAlgError`` when the matrix
    is structurally or numerically singular.
    """
    m = M.shape[0]
    cols = np.asarray(cols, dtype=np.int64)
    if cols.size != m:
        raise np.linalg.LinAlgError("basis is not square")
    if m < DENSE_BELOW:
        return np.ascontiguousarray(np.linalg.inv(M.dense_columns(cols)))
    counts = M.indptr[cols + 1] - M.indptr[cols]
    take = np.repeat(M.indptr[cols] - np.concatenate([[0], np.cumsum(counts)[:-1]]), counts) + np.arange(counts.sum())
    bcol = np.repeat(np.arange(m), counts)
    brow, bval = M.indices[take], M.data[take]
    col_ptr = np.concatenate([[0], np.cumsum(counts)])
    order = np.lexsort((bcol, brow))
    row_ptr = np.concatenate([[0], np.cumsum(np.bincount(brow, minlength=m))])
    row_cols, row_vals = bcol[order], bval[order]
    match_col = _matching(m, row_ptr.tolist(), row_cols.tolist(), col_ptr.tolist(), brow.tolist())
    if match_col is None:
        raise np.linalg.LinAlgError("basis is structurally singular")
    col_of = np.empty(m, dtype=np.int64)
    col_of[match_col] = np.arange(m)
    # X solves B X = I; X[j] is the row of B^-1 for basis position j
    X = np.zeros((m, m))
    solved = np.zeros(m, dtype=bool)
    for comp in _components(m, row_ptr, row_cols, match_col):
        rows = np.array(comp, dtype=np.int64)
        unknown = col_of[rows]
        s = np.concatenate([np.arange(row_ptr[r], row_ptr[r + 1]) for r in rows]) if rows.size > 1 \
            else np.arange(row_ptr[rows[0]], row_ptr[rows[0] + 1])
        owner = np.repeat(np.arange(rows.size), np.diff(row_ptr)[rows])
        jc, jv = row_cols[s], row_vals[s]
        outside = solved[jc]
        rhs = np.zeros((rows.size, m))
        rhs[np.arange(rows.size), rows] = 1.0
        if outside.any():
            np.add.at(rhs, owner[outside], -jv[outside, None] * X[jc[outside]])
        if rows.size == 1:
            X[unknown[0]] = rhs[0] / jv[~outside].sum()
        else:
            pos = {int(j): k for k, j in enumerate(unknown)}
            D = np.zeros((rows.size, rows.size))
            np.add.at(D, (owner[~outside], [pos[int(j)] for j in jc[~outside]]), jv[~outside])
            X[unknown] = np.linalg.solve(D, rhs)
        solved[unknown] = True
    return X
