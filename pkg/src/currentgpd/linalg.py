"""Small dense linear algebra that also runs on dual scalars.

Float-only rank/null-space queries go through numpy's SVD; the generic
routines here exist so that solves and orthonormalisation can sit inside
AD-evaluated code paths.
"""

from __future__ import annotations

import numpy as np

from .ad import sqrt, value
from .errors import SingularNormalization


def linsolve(A, b):
    """Solve A x = b by LU with partial pivoting; entries may be duals.

    A is a list of rows, b a list; pivoting compares underlying values.
    """
    n = len(b)
    M = [list(row) for row in A]
    rhs = list(b)
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(value(M[r][col])))
        if abs(value(M[piv][col])) == 0.0:
            raise SingularNormalization("singular linear system")
        if piv != col:
            M[col], M[piv] = M[piv], M[col]
            rhs[col], rhs[piv] = rhs[piv], rhs[col]
        inv = 1.0 / M[col][col]
        for r in range(col + 1, n):
            f = M[r][col] * inv
            for c in range(col, n):
                M[r][c] = M[r][c] - f * M[col][c]
            rhs[r] = rhs[r] - f * rhs[col]
    x = [0.0] * n
    for r in range(n - 1, -1, -1):
        acc = rhs[r]
        for c in range(r + 1, n):
            acc = acc - M[r][c] * x[c]
        x[r] = acc / M[r][r]
    return x


def dot_list(a, b):
    acc = a[0] * b[0]
    for x, y in zip(a[1:], b[1:]):
        acc = acc + x * y
    return acc


def gram_schmidt(vectors, drop_tol=1e-12):
    """Orthonormalise a list of component-lists; dual entries allowed."""
    out = []
    for v in vectors:
        w = list(v)
        for u in out:
            c = dot_list(w, u)
            w = [wi - c * ui for wi, ui in zip(w, u)]
        nrm = sqrt(dot_list(w, w))
        if abs(value(nrm)) < drop_tol:
            continue
        out.append([wi / nrm for wi in w])
    return out


def det(A):
    """Determinant via the generic LU; dual entries allowed."""
    n = len(A)
    M = [list(row) for row in A]
    sign = 1.0
    d = 1.0
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(value(M[r][col])))
        if abs(value(M[piv][col])) == 0.0:
            return 0.0
        if piv != col:
            M[col], M[piv] = M[piv], M[col]
            sign = -sign
        inv = 1.0 / M[col][col]
        for r in range(col + 1, n):
            f = M[r][col] * inv
            for c in range(col, n):
                M[r][c] = M[r][c] - f * M[col][c]
        d = d * M[col][col]
    return d * sign


def rank_floor(singular_values, rel=1e-8):
    """Scale-invariant rank threshold: rel * max(largest singular value, 1)."""
    smax = float(singular_values[0]) if len(singular_values) else 0.0
    return rel * max(smax, 1.0)


def svd_rank(J, rel=1e-8):
    s = np.linalg.svd(np.asarray(J, dtype=float), compute_uv=False)
    thr = rank_floor(s, rel)
    return int(np.sum(s > thr)), s


def null_space(J, rel=1e-8):
    """Orthonormal kernel basis (columns) of a float matrix via SVD."""
    J = np.asarray(J, dtype=float)
    u, s, vt = np.linalg.svd(J)
    thr = rank_floor(s, rel)
    r = int(np.sum(s > thr))
    return vt[r:].T.copy()
