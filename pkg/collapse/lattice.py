from __future__ import annotations

import itertools

import numpy as np

LLL_DELTA = 0.75


def gram_schmidt(basis: np.ndarray, gram: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gram-Schmidt on the rows of ``basis`` under the inner product <a, b> = a^T gram b.

    Returns (mu, B) with mu[i, j] = <b_i, b*_j> / B[j] and B[i] = |b*_i|^2.
    """
    rows = basis.astype(float)
    count = rows.shape[0]
    star = np.zeros_like(rows)
    mu = np.zeros((count, count))
    norms = np.zeros(count)
    for i in range(count):
        star[i] = rows[i]
        for j in range(i):
            mu[i, j] = rows[i] @ gram @ star[j] / norms[j]
            star[i] = star[i] - mu[i, j] * star[j]
        norms[i] = star[i] @ gram @ star[i]
        if not np.isfinite(norms[i]) or norms[i] <= 0.0:
            raise ValueError(f"degenerate basis: |b*_{i}|^2 = {norms[i]}")
    return mu, norms


def lll_reduce(basis: np.ndarray, gram: np.ndarray, delta: float = LLL_DELTA) -> np.ndarray:
    """LLL reduction of integer row vectors under a positive definite Gram matrix."""
    if not 0.25 < delta < 1.0:
        raise ValueError(f"LLL delta must satisfy 1/4 < delta < 1, got {delta}")
    basis = np.array(basis, dtype=np.int64)
    mu, norms = gram_schmidt(basis, gram)
    k = 1
    while k < basis.shape[0]:
        for j in range(k - 1, -1, -1):
            if abs(mu[k, j]) > 0.5:
                basis[k] -= int(round(mu[k, j])) * basis[j]
                mu, norms = gram_schmidt(basis, gram)
        if norms[k] >= (delta - mu[k, k - 1] ** 2) * norms[k - 1]:
            k += 1
        else:
            basis[[k - 1, k]] = basis[[k, k - 1]]
            mu, norms = gram_schmidt(basis, gram)
            k = max(k - 1, 1)
    return basis


def short_offsets(basis: np.ndarray) -> np.ndarray:
    """All nonzero {-1, 0, 1} combinations of the rows, one per +/- pair."""
    dim = basis.shape[0]
    out = []
    for coeffs in itertools.product((-1, 0, 1), repeat=dim):
        nonzero = [c for c in coeffs if c]
        if not nonzero or nonzero[0] < 0:
            continue
        out.append(np.asarray(coeffs) @ basis)
    return np.unique(np.asarray(out, dtype=np.int64), axis=0)


def axis_offsets(dim: int = 3) -> np.ndarray:
    return np.eye(dim, dtype=np.int64)
