"""Cyclic Jacobi eigensolver for dense symmetric matrices.

Sweeps use a round-robin (tournament) ordering: each round applies n/2
rotations on disjoint index pairs at once, which commute, so a round is a
handful of vectorised row and column updates.  Every pair is visited once per
sweep.
"""

from __future__ import annotations

import numpy as np

from .errors import EigenError


def _round_robin(n):
    """Yield n-1 (or n) rounds of disjoint index pairs covering every pair once."""
    players = list(range(n)) + ([-1] if n % 2 else [])
    m = len(players)
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if p >= 0 and q >= 0]
        if pairs:
            yield np.array(pairs, dtype=np.int64)
        players = [players[0], players[-1]] + players[1:-1]


def off_norm(A) -> float:
    off = A - np.diag(np.diag(A))
    return float(np.linalg.norm(off))


def jacobi_eigh(A, tol=1e-12, max_sweeps=100):
    """Eigenvalues (ascending) and orthonormal eigenvectors (columns) of symmetric ``A``.

    Iterates until the off-diagonal Frobenius norm drops below
    ``tol * max(1, ||A||_F)``.
    """
    A = np.array(A, dtype=np.float64, copy=True)
    n = A.shape[0]
    if A.shape != (n, n):
        raise EigenError(f"expected a square matrix, got {A.shape}")
    if not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max(initial=0.0))):
        raise EigenError("matrix is not symmetric")
    A = 0.5 * (A + A.T)
    V = np.eye(n)
    if n <= 1:
        return np.diag(A).copy(), V
    threshold = tol * max(1.0, float(np.linalg.norm(A)))
    rounds = list(_round_robin(n))
    for _ in range(max_sweeps):
        if off_norm(A) < threshold:
            break
        for pairs in rounds:
            p, q = pairs[:, 0], pairs[:, 1]
            apq = A[p, q]
            active = apq != 0.0
            if not active.any():
                continue
            p, q, apq = p[active], q[active], apq[active]
            theta = (A[q, q] - A[p, p]) / (2.0 * apq)
            big = np.abs(theta) > 1e150
            theta_ = np.where(big, 1.0, theta)
            t = np.sign(theta_) / (np.abs(theta_) + np.sqrt(theta_ * theta_ + 1.0))
            t = np.where(big, 0.5 / np.where(big, theta, 1.0), t)
            t[theta == 0.0] = 1.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            # A <- A P (columns), then P^T A (rows); V <- V P
            cp, cq = A[:, p].copy(), A[:, q]
            A[:, p] = c * cp - s * cq
            A[:, q] = s * cp + c * cq
            rp, rq = A[p, :].copy(), A[q, :]
            A[p, :] = c[:, None] * rp - s[:, None] * rq
            A[q, :] = s[:, None] * rp + c[:, None] * rq
            A[p, q] = 0.0
            A[q, p] = 0.0
            vp, vq = V[:, p].copy(), V[:, q]
            V[:, p] = c * vp - s * vq
            V[:, q] = s * vp + c * vq
    else:
        if off_norm(A) >= threshold:
            raise EigenError(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]
