import math

import numpy as np
import pytest

from diamondnet.config import DEFAULT_PARAMS, config_from_dict
from diamondnet.model import TWO_PI, DiamondParams


def baseline(**overrides) -> DiamondParams:
    params = dict(DEFAULT_PARAMS)
    params.update(overrides)
    return config_from_dict({"params": params}).diamond_params()


def optimized(**overrides) -> DiamondParams:
    return baseline(Q1=51.286, Q2=1e4, gamma_hz=1e7, **overrides)


def decoupled(**overrides) -> DiamondParams:
    zero = {"mag_hz": 0.0}
    return baseline(g=zero, h=zero, f=zero, k=zero, gamma_hz=0.0, **overrides)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_well_conditioned(rng, n=8):
    """Complex matrix with singular values spread over [1, 1e3]."""
    q1, _ = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    q2, _ = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    return q1 @ np.diag(np.logspace(0, 3, n)) @ q2


def full_pivot_inverse(a):
    """Gauss-Jordan inverse with complete pivoting, written independently of the package."""
    a = [[complex(x) for x in row] for row in np.asarray(a)]
    n = len(a)
    aug = [row + [1.0 + 0j if i == j else 0j for j in range(n)] for i, row in enumerate(a)]
    cols = list(range(n))
    for k in range(n):
        pr, pc = max(((r, c) for r in range(k, n) for c in range(k, n)),
                     key=lambda rc: abs(aug[rc[0]][rc[1]]))
        aug[k], aug[pr] = aug[pr], aug[k]
        if pc != k:
            for row in aug:
                row[k], row[pc] = row[pc], row[k]
            cols[k], cols[pc] = cols[pc], cols[k]
        piv = aug[k][k]
        aug[k] = [x / piv for x in aug[k]]
        for r in range(n):
            if r != k and aug[r][k] != 0:
                fac = aug[r][k]
                aug[r] = [x - fac * y for x, y in zip(aug[r], aug[k])]
    inv_perm = np.array([row[n:] for row in aug])
    # undo the column permutation: row k of the result belongs to variable cols[k]
    out = np.empty_like(inv_perm)
    for k, c in enumerate(cols):
        out[c] = inv_perm[k]
    return out


__all__ = ["baseline", "optimized", "decoupled", "random_well_conditioned",
           "full_pivot_inverse", "TWO_PI", "math"]
