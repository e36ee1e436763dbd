"""Dense complex LU factorization and inversion for small systems.

All routines accept either a single ``(n, n)`` matrix or a stack of shape
``(..., n, n)``; the stacked form is what the frequency sweeps use.
"""
from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, SingularMatrix

# pivot magnitude below this fraction of the largest entry counts as singular
SINGULAR_RTOL = 1e-14


def as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim < 2 or a.shape[-1] < 1 or a.shape[-2] < 1:
        raise DimensionMismatch(f"expected a matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def max_norm(a) -> np.ndarray | float:
    """Largest entry magnitude over the trailing two axes."""
    return np.max(np.abs(a), axis=(-2, -1))


def lu_factor(a, *, check: bool = True):
    """LU factorization with partial (row) pivoting.

    Returns ``(lu, perm, singular)``: unit-lower and upper factors packed in
    ``lu``, the row permutation with ``a[..., perm, :] = L @ U``, and a boolean
    mask of singular matrices. With ``check=True`` a singular matrix raises
    :class:`SingularMatrix`; otherwise the offending pivot is replaced by 1 so
    the rest of the stack still factors and the mask reports it.
    """
    a = as_matrix(a)
    n = a.shape[-1]
    if a.shape[-2] != n:
        raise DimensionMismatch(f"matrix must be square, got {a.shape[-2:]}")
    batch_shape = a.shape[:-2]
    lu = a.reshape(-1, n, n).copy()
    nb = lu.shape[0]
    rows = np.arange(nb)
    perm = np.tile(np.arange(n), (nb, 1))
    tol = SINGULAR_RTOL * max_norm(lu)
    singular = np.zeros(nb, dtype=bool)

    for k in range(n):
        p = k + np.argmax(np.abs(lu[:, k:, k]), axis=1)
        swap = p != k
        if swap.any():
            r = rows[swap]
            pk = p[swap]
            tmp = lu[r, k, :].copy()
            lu[r, k, :] = lu[r, pk, :]
            lu[r, pk, :] = tmp
            tmp = perm[r, k].copy()
            perm[r, k] = perm[r, pk]
            perm[r, pk] = tmp
        pivot = lu[:, k, k]
        bad = (np.abs(pivot) < tol) | (pivot == 0)
        if bad.any():
            if check:
                raise SingularMatrix(
                    f"pivot {k} magnitude {np.abs(pivot[bad]).min():.3e} below "
                    f"{SINGULAR_RTOL:g} x max entry"
                )
            singular |= bad
            lu[bad, k, k] = 1.0
            pivot = lu[:, k, k]
        if k + 1 < n:
            lu[:, k + 1:, k] /= pivot[:, None]
            lu[:, k + 1:, k + 1:] -= lu[:, k + 1:, k, None] * lu[:, None, k, k + 1:]

    return (lu.reshape(a.shape), perm.reshape(batch_shape + (n,)),
            singular.reshape(batch_shape))


def lu_solve(lu, perm, b) -> np.ndarray:
    """Solve ``a @ x = b`` from the output of :func:`lu_factor`.

    ``b`` has shape ``(..., n, k)`` broadcastable against the factor stack.
    """
    lu = np.asarray(lu)
    n = lu.shape[-1]
    b = np.asarray(b, dtype=complex)
    if b.shape[-2] != n:
        raise DimensionMismatch(f"right-hand side has {b.shape[-2]} rows, expected {n}")
    batch = np.broadcast_shapes(lu.shape[:-2], b.shape[:-2])
    x = np.take_along_axis(
        np.broadcast_to(b, batch + b.shape[-2:]),
        np.broadcast_to(perm, batch + (n,))[..., None],
        axis=-2,
    ).copy()
    for i in range(1, n):
        x[..., i, :] -= np.einsum("...j,...jk->...k", lu[..., i, :i], x[..., :i, :])
    for i in range(n - 1, -1, -1):
        if i + 1 < n:
            x[..., i, :] -= np.einsum("...j,...jk->...k", lu[..., i, i + 1:], x[..., i + 1:, :])
        x[..., i, :] /= lu[..., i, i, None]
    return x


def solve(a, b, *, check: bool = True) -> np.ndarray:
    """Solve ``a @ x = b``; ``b`` may be a vector or a matrix of right-hand sides."""
    lu, perm, _ = lu_factor(a, check=check)
    b = np.asarray(b, dtype=complex)
    if b.ndim == 1:
        return lu_solve(lu, perm, b[:, None])[..., 0]
    return lu_solve(lu, perm, b)


def invert(m) -> np.ndarray:
    """Inverse of a nonsingular square matrix (or stack of them)."""
    m = as_matrix(m)
    n = m.shape[-1]
    if m.shape[-2] != n:
        raise DimensionMismatch(f"matrix must be square, got {m.shape[-2:]}")
    lu, perm, _ = lu_factor(m)
    return lu_solve(lu, perm, np.eye(n, dtype=complex))


def matmul(a, b) -> np.ndarray:
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[-1] != b.shape[-2]:
        raise DimensionMismatch(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def matvec(a, v) -> np.ndarray:
    a = as_matrix(a)
    v = np.asarray(v, dtype=complex)
    if v.ndim != 1:
        raise DimensionMismatch(f"expected a vector, got shape {v.shape}")
    if a.shape[-1] != v.shape[0]:
        raise DimensionMismatch(f"cannot apply {a.shape} matrix to length-{v.shape[0]} vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector entries must be finite")
    return a @ v
