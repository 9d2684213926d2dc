"""Finite Blaschke products, model spaces and the Type II generator ``g``."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConditioningError, NumericalInstabilityError, ValidationError
from .hardy import DEFAULT_TOL, HardyVec1, Truncation

EPS_BD = 1e-3
# mass below this is treated as exactly zero when sizing series extensions
_TAIL_FLOOR = 1e-30
_MAX_EXTENSION = 20000


@dataclass(frozen=True, eq=False)
class BlaschkeProduct:
    """``phase * prod_j (z - a_j) / (1 - conj(a_j) z)``.

    Zeros must sit at least ``eps_bd`` inside the unit circle.  An empty zero
    list encodes the constant inner function ``phase``.
    """

    zeros: tuple = ()
    phase: complex = 1.0
    eps_bd: float = EPS_BD

    def __post_init__(self):
        zeros = tuple(complex(a) for a in self.zeros)
        object.__setattr__(self, "zeros", zeros)
        object.__setattr__(self, "phase", complex(self.phase))
        if abs(abs(self.phase) - 1.0) > DEFAULT_TOL:
            raise ValidationError(f"phase must be unimodular, |phase| = {abs(self.phase)!r}")
        for a in zeros:
            if not abs(a) <= 1.0 - self.eps_bd:
                raise ValidationError(
                    f"zero {a} has modulus {abs(a):.6g}; zeros must satisfy |a| <= 1 - {self.eps_bd:g}"
                )

    @property
    def degree(self):
        return len(self.zeros)

    @property
    def radius(self):
        """Largest zero modulus (0 for monomials and constants)."""
        return max((abs(a) for a in self.zeros), default=0.0)

    def is_polynomial(self):
        return all(a == 0 for a in self.zeros)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.full(z.shape, self.phase, dtype=complex)
        for a in self.zeros:
            out = out * (z - a) / (1 - np.conj(a) * z)
        return out

    def __repr__(self):
        return f"BlaschkeProduct(zeros={list(self.zeros)}, phase={self.phase})"


def monomial_inner(d, phase=1.0):
    """``phase * z^d``."""
    return BlaschkeProduct((0.0,) * d, phase)


def taylor_coeffs(phi, N):
    """Taylor coefficients of ``phi`` up to degree ``N``.

    Each Mobius factor is expanded as ``(z - a) * sum (conj(a) z)^n``, i.e.
    ``-a`` at degree 0 and ``conj(a)^(n-1) (1 - |a|^2)`` at degree ``n >= 1``.
    """
    if N < 0:
        raise ValidationError(f"N must be nonnegative, got {N}")
    out = np.zeros(N + 1, dtype=complex)
    out[0] = phi.phase
    n = np.arange(1, N + 1)
    for a in phi.zeros:
        factor = np.empty(N + 1, dtype=complex)
        factor[0] = -a
        if a == 0:
            factor[1:] = 0
            if N >= 1:
                factor[1] = 1
        else:
            factor[1:] = np.conj(a) ** (n - 1) * (1 - abs(a) ** 2)
        out = np.convolve(out, factor)[: N + 1]
    return HardyVec1(out)


def _extension(phi, tol):
    """Extra degrees after which the coefficients of ``phi`` fall below ``tol``."""
    r = phi.radius
    if r == 0:
        return phi.degree + 1
    # |phi_n| <= C n^(d-1) r^n; pad the pure geometric estimate for the polynomial factor
    steps = math.log(tol) / math.log(r)
    extra = int(math.ceil(steps + 4 * phi.degree * (1 + math.log1p(steps)))) + 8
    return min(extra, _MAX_EXTENSION)


def tail_mass(phi, start):
    """l2 norm of the Taylor coefficients of ``phi`` with index ``>= start``."""
    start = max(int(start), 0)
    L = start + _extension(phi, _TAIL_FLOOR)
    c = taylor_coeffs(phi, L).coeffs
    return float(np.linalg.norm(c[start:]))


def accurate_range(phi, N, tol):
    """Largest ``k <= N - d`` with ``||phi z^k - P_N(phi z^k)|| <= tol`` (-1 if none).

    ``P_N`` cuts to degree ``N``; the dropped part of ``phi z^k`` is the tail
    of ``phi`` from index ``N - k + 1``.
    """
    d = phi.degree
    if N - d < 0:
        return -1
    L = N + 1 + _extension(phi, _TAIL_FLOOR)
    c = taylor_coeffs(phi, L).coeffs
    # suffix[j] = ||c[j:]||
    suffix = np.sqrt(np.cumsum((np.abs(c) ** 2)[::-1])[::-1])
    for k in range(N - d, -1, -1):
        if suffix[N - k + 1] <= tol:
            return k
    return -1


def eval_boundary(phi, theta):
    """``phi(e^{i theta})``; unimodular for a finite Blaschke product."""
    return complex(phi(np.exp(1j * theta)))


def angular_derivative(phi, theta):
    """``|phi'(e^{i theta})| = sum_j (1 - |a_j|^2) / |e^{i theta} - a_j|^2``."""
    w = np.exp(1j * theta)
    return float(sum((1 - abs(a) ** 2) / abs(w - a) ** 2 for a in phi.zeros))


@dataclass(frozen=True, eq=False)
class ModelSpaceBasis:
    """Orthonormal basis of the truncated model space ``K_phi``."""

    columns: tuple
    dim: int
    deg: int

    @property
    def matrix(self):
        if not self.columns:
            return np.zeros((self.deg + 1, 0), dtype=complex)
        return np.column_stack([c.coeffs for c in self.columns])

    def project(self, f):
        Q = self.matrix
        a = _resize(f.coeffs, self.deg + 1)
        return HardyVec1(Q @ (Q.conj().T @ a))

    def residual(self, f):
        a = _resize(f.coeffs, self.deg + 1)
        Q = self.matrix
        return float(np.linalg.norm(a - Q @ (Q.conj().T @ a)))


def _resize(a, n):
    out = np.zeros(n, dtype=complex)
    m = min(n, len(a))
    out[:m] = a[:m]
    return out


def shifted_columns(phi, N, kmax):
    """Matrix whose column ``k`` is ``P_N(phi z^k)`` for ``k = 0..kmax``."""
    c = taylor_coeffs(phi, N).coeffs
    M = np.zeros((N + 1, kmax + 1), dtype=complex)
    for k in range(kmax + 1):
        M[k:, k] = c[: N + 1 - k]
    return M


def model_space_basis(phi, trunc):
    """Orthonormal basis of ``P_N H2`` minus ``span{phi z^k : k <= N - d}``.

    The complement comes from a full SVD with rank cutoff ``trunc.tol``; the
    returned basis is then put in echelon form by orthogonalizing the
    projections of ``1, z, z^2, ...`` so results do not depend on LAPACK's
    choice of singular vectors.
    """
    N, d = trunc.deg_z, phi.degree
    if d > N - 1:
        raise ValidationError(f"Blaschke degree {d} needs deg_z >= {d + 1}, got {N}")
    Phi = shifted_columns(phi, N, N - d)
    U, s, _ = np.linalg.svd(Phi, full_matrices=True)
    rank = int(np.sum(s > trunc.tol))
    if N + 1 - rank != d:
        raise ConditioningError(
            f"model space has numerical dimension {N + 1 - rank}, expected {d}; "
            f"offending zero cluster: {_zero_cluster(phi)}"
        )
    if d == 0:
        return ModelSpaceBasis((), 0, N)
    C = U[:, rank:]
    P = C @ C.conj().T
    cols = []
    for j in range(N + 1):
        v = P[:, j].copy()
        for q in cols:
            v -= q * np.vdot(q, v)
        for q in cols:
            v -= q * np.vdot(q, v)
        nv = np.linalg.norm(v)
        if nv > 1e-6:
            v /= nv
            lead = v[np.argmax(np.abs(v) > 1e-12)]
            v *= abs(lead) / lead
            cols.append(v)
        if len(cols) == d:
            break
    return ModelSpaceBasis(tuple(HardyVec1(c) for c in cols), d, N)


def _zero_cluster(phi):
    zs = np.array(phi.zeros)
    if len(zs) < 2:
        return [complex(z) for z in zs]
    i = int(np.argmax(np.abs(zs)))
    near = np.abs(zs - zs[i]) < 0.05 + (1 - abs(zs[i]))
    return [complex(z) for z in zs[near]]


@dataclass(frozen=True, eq=False)
class GFunction:
    """Truncated Taylor series of ``g = sigma (conj(c) phi - 1) / (z - e^{i theta})``."""

    series: HardyVec1
    norm: float
    sigma: float
    theta: float
    boundary_value: complex
    tail: float = 0.0


def g_function(phi, sigma, theta, N, tol=DEFAULT_TOL):
    """Coefficients of ``g`` to degree ``N`` from the division recurrence.

    With ``c = phi(e^{i theta})`` and ``w = e^{i theta}``, matching powers in
    ``g(z)(z - w) = sigma (conj(c) phi(z) - 1)`` gives
    ``g_0 = -conj(w) sigma (conj(c) phi_0 - 1)`` and
    ``g_n = conj(w) (g_{n-1} - sigma conj(c) phi_n)``.

    The series is also run past ``N`` to measure the dropped tail (stored in
    ``tail``); coefficients that fail to decay raise
    ``NumericalInstabilityError``.
    """
    if not sigma > 0:
        raise ValidationError(f"sigma must be positive, got {sigma!r}")
    theta = float(theta) % (2 * math.pi)
    w = np.exp(1j * theta)
    c = eval_boundary(phi, theta)
    extra = _extension(phi, min(tol, 1e-16) * 1e-3)
    L = N + extra
    ph = taylor_coeffs(phi, L).coeffs
    g = np.empty(L + 1, dtype=complex)
    g[0] = -np.conj(w) * sigma * (np.conj(c) * ph[0] - 1)
    for n in range(1, L + 1):
        g[n] = np.conj(w) * (g[n - 1] - sigma * np.conj(c) * ph[n])
    _check_decay(g, N, tol)
    series = HardyVec1(g[: N + 1])
    return GFunction(
        series=series,
        norm=series.norm(),
        sigma=float(sigma),
        theta=theta,
        boundary_value=c,
        tail=float(np.linalg.norm(g[N + 1 :])),
    )


def _check_decay(g, N, tol):
    window = g[N:]
    if len(window) < 8:
        return
    q = max(len(window) // 4, 2)
    head = float(np.max(np.abs(window[:q])))
    last = float(np.max(np.abs(window[-q:])))
    if last > max(tol, 1e-12) and last >= head:
        raise NumericalInstabilityError(
            f"g coefficients do not decay past degree {N}: max |g_n| {head:.3e} -> {last:.3e}"
        )


def g_degree_for(phi, tol):
    """Smallest ``N`` with ``r^N < tol (1 - r)`` for ``r = max |a_j|``."""
    r = phi.radius
    if r == 0:
        return max(phi.degree - 1, 0)
    return int(math.ceil(math.log(tol * (1 - r)) / math.log(r)))


@dataclass
class GCheck:
    max_inner: float
    projection_residual: float
    truncation_loss: float
    passed: bool
    details: dict = field(default_factory=dict)


def check_g(gf, phi, trunc):
    """Orthogonality of ``g`` to ``phi H2`` and membership in ``K_phi``."""
    N = trunc.deg_z
    a = gf.series.coeffs
    loss = float(np.linalg.norm(a[N + 1 :]))
    g = _resize(a, N + 1)
    d = phi.degree
    Phi = shifted_columns(phi, N, N - d)
    inners = np.abs(Phi.conj().T @ g)
    max_inner = float(inners.max()) if inners.size else 0.0
    K = model_space_basis(phi, trunc)
    resid = K.residual(HardyVec1(g))
    tol = trunc.tol
    return GCheck(
        max_inner=max_inner,
        projection_residual=resid,
        truncation_loss=loss,
        passed=max_inner < tol and resid < tol and loss < tol,
        details={"safe_k": N - d, "dim_K": K.dim},
    )
