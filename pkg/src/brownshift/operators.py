"""The Brownian shift B and the 3-Brownian shift T on truncated Hardy spaces.

``T(F, f, alpha) = (z1 F + sigma J f, z f + sigma alpha, e^{i theta} alpha)``
and ``B(f, alpha) = (z f + sigma alpha, e^{i theta} alpha)``.

Forward applications raise ``TruncationError`` rather than drop mass; the
adjoint never raises degree and is exact at any truncation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError, IterationError, TruncationError, ValidationError
from .hardy import (
    DEFAULT_TOL,
    HardyVec1,
    HardyVec2,
    StateVec,
    adjoint_J,
    backward_shift,
    backward_shift_z1,
    embed_J,
    fit_coeffs,
    flat_labels,
    hpoly,
    mul_z,
    mul_z1,
)


@dataclass(frozen=True)
class BrownianParams:
    sigma: float
    theta: float = 0.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValidationError(f"sigma must be positive, got {self.sigma!r}")
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "theta", float(self.theta) % (2 * math.pi))

    @property
    def rotation(self):
        return complex(np.exp(1j * self.theta))

    @property
    def norm(self):
        """``||T|| = sqrt(1 + sigma^2)``."""
        return math.sqrt(1 + self.sigma**2)


def apply_B(p, f, alpha, tol=DEFAULT_TOL):
    """Brownian shift on ``H2(D) + C``."""
    out = mul_z(f, tol).coeffs.copy()
    out[0] += p.sigma * alpha
    return HardyVec1(out), p.rotation * complex(alpha)


def apply_T(p, x, tol=DEFAULT_TOL):
    trunc = x.truncation(tol)
    F = mul_z1(x.F, tol) + p.sigma * embed_J(x.f, trunc)
    f, alpha = apply_B(p, x.f, x.alpha, tol)
    return StateVec(F, f, alpha)


def apply_T_adjoint(p, x, tol=DEFAULT_TOL):
    """``T*(F, f, alpha) = (M_{z1}* F, sigma J* F + S* f, sigma <f, 1> + e^{-i theta} alpha)``."""
    n_f = len(x.f.coeffs)
    jf = fit_coeffs(adjoint_J(x.F).coeffs, n_f, tol)
    f = p.sigma * jf + backward_shift(x.f).coeffs
    alpha = p.sigma * x.f.coeffs[0] + np.conj(p.rotation) * x.alpha
    return StateVec(backward_shift_z1(x.F), HardyVec1(f), alpha)


def apply_T_power(p, x, n, tol=DEFAULT_TOL):
    for step in range(n):
        try:
            x = apply_T(p, x, tol)
        except TruncationError as exc:
            raise TruncationError(
                f"T^{n}: overflow at step {step + 1}: {exc}", exc.lost_mass, step + 1
            ) from exc
    return x


def apply_normalized_power(p, x, n, tol=DEFAULT_TOL):
    """``(T / sqrt(1 + sigma^2))^n x``."""
    return apply_T_power(p, x, n, tol) * (1 + p.sigma**2) ** (-n / 2)


def apply_T_adjoint_power(p, x, n, tol=DEFAULT_TOL):
    for _ in range(n):
        x = apply_T_adjoint(p, x, tol)
    return x


def apply_normalized_adjoint_power(p, x, n, tol=DEFAULT_TOL):
    return apply_T_adjoint_power(p, x, n, tol) * (1 + p.sigma**2) ** (-n / 2)


def orbit_e3_closed_form(p, n, trunc):
    """``T^n e3`` from the closed form

    ``(sigma^2 sum_{k<=n-2} e^{ik theta} h_{n-2-k}, sigma sum_{k<=n-1} e^{ik theta} z^{n-1-k}, e^{in theta})``.
    """
    if n - 1 > trunc.deg_z or n - 2 > min(trunc.deg_z1, trunc.deg_z2):
        raise TruncationError(
            f"T^{n} e3 needs degrees ({n - 2}, {n - 2}, {n - 1}); truncation is {trunc.degrees()}"
        )
    w = p.rotation
    F = np.zeros(trunc.shape_F, dtype=complex)
    for k in range(n - 1):
        F += w**k * hpoly(n - 2 - k, trunc).coeffs
    f = np.zeros(trunc.n_f, dtype=complex)
    for k in range(n):
        f[n - 1 - k] += w**k
    return StateVec(HardyVec2(p.sigma**2 * F), HardyVec1(p.sigma * f), w**n)


def e3_orbit_norm_sq(p, n):
    """``||T^n e3||^2 = 1 + n sigma^2 + sigma^4 n (n - 1) / 2``."""
    s2 = p.sigma**2
    return 1 + n * s2 + s2**2 * n * (n - 1) / 2


# ---------------------------------------------------------------------------
# matrices


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Sparse matrix with row and column coordinate descriptors."""

    rows: tuple
    cols: tuple
    entries: sp.csr_matrix

    @property
    def shape(self):
        return self.entries.shape

    def toarray(self):
        return self.entries.toarray()

    def to_coo_text(self):
        """One ``row col re im`` line per stored entry, sorted by (row, col)."""
        coo = self.entries.tocoo()
        order = np.lexsort((coo.col, coo.row))
        lines = [
            f"{coo.row[i]} {coo.col[i]} {repr(float(coo.data[i].real))} {repr(float(coo.data[i].imag))}"
            for i in order
        ]
        return "\n".join(lines) + ("\n" if lines else "")


def _idx_F(t, m, k):
    return m * (t.deg_z2 + 1) + k


def _idx_f(t, k):
    return t.n_F + k


def _build(entries, src, dst):
    rows, cols, vals = zip(*entries) if entries else ((), (), ())
    M = sp.coo_matrix((np.array(vals, dtype=complex), (rows, cols)), shape=(dst.dim, src.dim))
    return OperatorMatrix(tuple(flat_labels(dst)), tuple(flat_labels(src)), M.tocsr())


def _shift_entries(src, dst, scalar_diag):
    ent = []
    for m in range(src.deg_z1 + 1):
        if m + 1 > dst.deg_z1:
            continue
        for k in range(min(src.deg_z2, dst.deg_z2) + 1):
            ent.append((_idx_F(dst, m + 1, k), _idx_F(src, m, k), 1.0))
    for k in range(src.deg_z + 1):
        if k + 1 <= dst.deg_z:
            ent.append((_idx_f(dst, k + 1), _idx_f(src, k), 1.0))
    if scalar_diag != 0:
        ent.append((dst.dim - 1, src.dim - 1, scalar_diag))
    return ent


def _perturbation_entries(p, src, dst, scalar_diag):
    ent = []
    for k in range(src.deg_z + 1):
        if k <= dst.deg_z2:
            ent.append((_idx_F(dst, 0, k), _idx_f(src, k), p.sigma))
    ent.append((_idx_f(dst, 0), src.dim - 1, p.sigma))
    if scalar_diag != 0:
        ent.append((dst.dim - 1, src.dim - 1, scalar_diag))
    return ent


def t_matrix(p, src, dst=None):
    """Matrix of ``P_dst T`` on the flat coordinates of ``src``.

    With ``dst = src.raised(1)`` the matrix is exact (nothing overflows).
    """
    dst = src if dst is None else dst
    ent = _shift_entries(src, dst, 0) + _perturbation_entries(p, src, dst, p.rotation)
    return _build(ent, src, dst)


def t_adjoint_matrix(p, trunc):
    """Matrix of ``T*`` on ``trunc``; exact when ``deg_z >= deg_z2``."""
    M = t_matrix(p, trunc).entries.conj().T.tocsr()
    return OperatorMatrix(tuple(flat_labels(trunc)), tuple(flat_labels(trunc)), M)


def decompose_T(p, trunc):
    """Split ``T = T_s + R``: ``T_s = diag(M_{z1}, S, 1)`` and the perturbation ``R``."""
    Ts = _build(_shift_entries(trunc, trunc, 1.0), trunc, trunc)
    R = _build(_perturbation_entries(p, trunc, trunc, p.rotation - 1), trunc, trunc)
    return Ts, R


def numerical_rank(M, tol=1e-10):
    A = M.toarray() if hasattr(M, "toarray") else np.asarray(M)
    s = np.linalg.svd(A, compute_uv=False)
    return int(np.sum(s > tol * max(1.0, s[0] if s.size else 0.0)))


# ---------------------------------------------------------------------------
# restricted norm


def restricted_norm(p, basis, max_iter=1000, tol=1e-13, seed=None):
    """Largest singular value of ``T`` on the safe part of ``basis``.

    Power iteration on ``A^H A`` with ``A`` the exact (degree-raising) matrix
    of ``T`` applied to the safe basis columns.  The start vector is the
    coordinate image of ``(0, phi, 0)`` when the basis has one, since vectors
    supported off the first coordinate attain the norm.
    """
    trunc = basis.trunc
    ext = trunc.raised(1)
    Q = basis.Q[:, basis.safe]
    if Q.shape[1] == 0:
        raise DimensionError("basis has no safe vectors")
    A = t_matrix(p, trunc, ext).entries @ Q
    x = None
    start = basis.seed_vector() if hasattr(basis, "seed_vector") else None
    if start is not None:
        x = Q.conj().T @ start
        if np.linalg.norm(x) < 1e-8:
            x = None
    if x is None:
        rng = np.random.default_rng(seed)
        x = rng.standard_normal(Q.shape[1]) + 1j * rng.standard_normal(Q.shape[1])
    x = x / np.linalg.norm(x)
    est = 0.0
    for _ in range(max_iter):
        y = A.conj().T @ (A @ x)
        new = math.sqrt(max(np.vdot(x, y).real, 0.0))
        ny = np.linalg.norm(y)
        if ny == 0:
            return 0.0
        x = y / ny
        if abs(new - est) < tol:
            return new
        est = new
    raise IterationError(f"power iteration did not converge in {max_iter} steps", est)
