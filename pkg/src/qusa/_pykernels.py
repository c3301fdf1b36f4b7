"""Numpy implementation of the propagation kernels.

Reference and fallback for :mod:`qusa._ckernels`; both expose the same
two functions with identical semantics.
"""
from __future__ import annotations

import math

import numpy as np

TAYLOR_TOL = 2.0**-53
MAX_TERMS = 60


def apply_generator(psi: np.ndarray, diag: np.ndarray, local: np.ndarray, triode_count: int) -> np.ndarray:
    """diag * psi + sum_t (1 x ... x local[t] x ... x 1) psi."""
    out = diag * psi
    n = local.shape[0]
    if n == 0:
        return out
    d = local.shape[1]
    for t in range(n):
        view = psi.reshape(d**t, d, d ** (triode_count - t - 1))
        out += np.einsum("ij,ajb->aib", local[t], view).reshape(-1)
    return out


def propagate(
    psi: np.ndarray,
    diag: np.ndarray,
    local: np.ndarray,
    triode_count: int,
    dt: float,
    norm_bound: float,
) -> np.ndarray:
    """exp(-i G dt) psi by Taylor series on substeps with ||G h|| <= 1."""
    nsub = max(1, math.ceil(norm_bound * abs(dt)))
    h = dt / nsub
    out = np.array(psi, dtype=complex, copy=True)
    for _ in range(nsub):
        term = out.copy()
        acc = out.copy()
        small = 0
        for k in range(1, MAX_TERMS):
            term = apply_generator(term, diag, local, triode_count) * (-1j * h / k)
            acc += term
            if np.linalg.norm(term) <= TAYLOR_TOL * np.linalg.norm(acc):
                small += 1
                if small == 2:
                    break
            else:
                small = 0
        out = acc
    return out
