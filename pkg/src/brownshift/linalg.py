"""Orthonormalization helpers shared by the subspace and Krylov code."""
from __future__ import annotations

import numpy as np


def mgs(X, reorth_threshold=0.5, rank_tol=None):
    """Modified Gram-Schmidt on the columns of ``X``.

    A column is projected a second time against the finished columns when any
    of its projection coefficients exceeds ``reorth_threshold`` times its
    original norm.  Columns whose remaining norm falls below
    ``rank_tol * original_norm`` are dropped.

    Returns ``(Q, kept)`` with ``kept`` the indices of the surviving columns.
    """
    X = np.array(X, dtype=complex)
    n, r = X.shape
    norms0 = np.linalg.norm(X, axis=0)
    flagged = np.zeros(r, dtype=bool)
    Q = np.zeros((n, r), dtype=complex)
    kept = []
    for j in range(r):
        v = X[:, j]
        if flagged[j] and kept:
            Qk = Q[:, : len(kept)]
            v = v - Qk @ (Qk.conj().T @ v)
        nv = np.linalg.norm(v)
        if norms0[j] == 0 or (rank_tol is not None and nv <= rank_tol * norms0[j]):
            continue
        q = v / nv
        Q[:, len(kept)] = q
        kept.append(j)
        if j + 1 < r:
            rest = X[:, j + 1 :]
            c = q.conj() @ rest
            X[:, j + 1 :] = rest - np.outer(q, c)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.abs(c) / norms0[j + 1 :]
            flagged[j + 1 :] |= ratio > reorth_threshold
    return Q[:, : len(kept)], kept


def orthonormality_defect(Q):
    """``max |Q^H Q - I|``."""
    G = Q.conj().T @ Q
    return float(np.max(np.abs(G - np.eye(G.shape[0])))) if G.size else 0.0


def subspace_distance(v, Q):
    """``||v - Q Q^H v||`` for orthonormal ``Q``."""
    return float(np.linalg.norm(v - Q @ (Q.conj().T @ v)))
