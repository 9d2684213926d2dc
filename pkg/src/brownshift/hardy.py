"""Truncated Hardy-space vectors on the disk and bidisk.

Every vector is stored densely by Taylor coefficient.  ``HardyVec1`` holds
``f(z) = sum a_k z^k`` for ``k <= deg_z`` and ``HardyVec2`` holds
``F(z1, z2) = sum a_{m,k} z1^m z2^k`` for ``m <= deg_z1``, ``k <= deg_z2``.
A ``StateVec`` is an element ``(F, f, alpha)`` of the direct sum
``H2(D^2) + H2(D) + C``.

Flat layout (used for matrices and bases) is fixed: bidisk monomials in
``(m, k)`` row-major order, then disk monomials by degree, then the scalar.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, TruncationError, ValidationError

DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class Truncation:
    """Rectangular degree bounds for one experiment."""

    deg_z1: int
    deg_z2: int
    deg_z: int
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        for name in ("deg_z1", "deg_z2", "deg_z"):
            value = getattr(self, name)
            if int(value) != value or value < 0:
                raise ValidationError(f"{name} must be a nonnegative integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if not self.tol > 0:
            raise ValidationError(f"tol must be positive, got {self.tol!r}")

    @classmethod
    def cube(cls, n, tol=DEFAULT_TOL):
        return cls(n, n, n, tol)

    @property
    def shape_F(self):
        return (self.deg_z1 + 1, self.deg_z2 + 1)

    @property
    def n_F(self):
        return (self.deg_z1 + 1) * (self.deg_z2 + 1)

    @property
    def n_f(self):
        return self.deg_z + 1

    @property
    def dim(self):
        return self.n_F + self.n_f + 1

    def raised(self, k=1):
        """Same tolerance, every degree bound increased by ``k``."""
        return Truncation(self.deg_z1 + k, self.deg_z2 + k, self.deg_z + k, self.tol)

    def with_tol(self, tol):
        return Truncation(self.deg_z1, self.deg_z2, self.deg_z, tol)

    def degrees(self):
        return (self.deg_z1, self.deg_z2, self.deg_z)


def _as_complex(a, ndim):
    arr = np.array(a, dtype=complex)
    if arr.ndim != ndim:
        raise DimensionError(f"expected a {ndim}-d coefficient array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class HardyVec1:
    """Taylor coefficients ``a_0 .. a_N`` of an element of H2(D)."""

    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _as_complex(self.coeffs, 1))

    @classmethod
    def zeros(cls, deg):
        return cls(np.zeros(deg + 1, dtype=complex))

    @classmethod
    def monomial(cls, k, deg, c=1.0):
        a = np.zeros(deg + 1, dtype=complex)
        a[k] = c
        return cls(a)

    @property
    def deg(self):
        return len(self.coeffs) - 1

    def norm(self):
        return float(np.linalg.norm(self.coeffs))

    def inner(self, other):
        return complex(np.vdot(other.coeffs, self.coeffs))

    def degree(self, tol=0.0):
        """Largest index with ``|a_k| > tol`` (-1 for the zero vector)."""
        nz = np.nonzero(np.abs(self.coeffs) > tol)[0]
        return int(nz[-1]) if nz.size else -1

    def resized(self, deg, tol=DEFAULT_TOL):
        """Zero-pad or cut to ``deg``; cutting mass above ``tol`` raises."""
        return HardyVec1(fit_coeffs(self.coeffs, deg + 1, tol))

    def __add__(self, other):
        _same_shape(self.coeffs, other.coeffs)
        return HardyVec1(self.coeffs + other.coeffs)

    def __sub__(self, other):
        _same_shape(self.coeffs, other.coeffs)
        return HardyVec1(self.coeffs - other.coeffs)

    def __mul__(self, c):
        return HardyVec1(self.coeffs * c)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class HardyVec2:
    """Coefficients ``a[m, k]`` of ``z1^m z2^k`` for an element of H2(D^2)."""

    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _as_complex(self.coeffs, 2))

    @classmethod
    def zeros(cls, trunc):
        return cls(np.zeros(trunc.shape_F, dtype=complex))

    @classmethod
    def monomial(cls, m, k, trunc, c=1.0):
        a = np.zeros(trunc.shape_F, dtype=complex)
        a[m, k] = c
        return cls(a)

    def norm(self):
        return float(np.linalg.norm(self.coeffs))

    def inner(self, other):
        _same_shape(self.coeffs, other.coeffs)
        return complex(np.vdot(other.coeffs, self.coeffs))

    def __add__(self, other):
        _same_shape(self.coeffs, other.coeffs)
        return HardyVec2(self.coeffs + other.coeffs)

    def __sub__(self, other):
        _same_shape(self.coeffs, other.coeffs)
        return HardyVec2(self.coeffs - other.coeffs)

    def __mul__(self, c):
        return HardyVec2(self.coeffs * c)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class StateVec:
    """An element ``(F, f, alpha)`` of H2(D^2) + H2(D) + C."""

    F: HardyVec2
    f: HardyVec1
    alpha: complex = 0j

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))

    @classmethod
    def zeros(cls, trunc):
        return cls(HardyVec2.zeros(trunc), HardyVec1.zeros(trunc.deg_z), 0j)

    @classmethod
    def e3(cls, trunc):
        return cls(HardyVec2.zeros(trunc), HardyVec1.zeros(trunc.deg_z), 1.0)

    @classmethod
    def from_array(cls, x, trunc):
        x = np.asarray(x, dtype=complex)
        if x.shape != (trunc.dim,):
            raise DimensionError(f"flat vector has shape {x.shape}, truncation needs ({trunc.dim},)")
        F = x[: trunc.n_F].reshape(trunc.shape_F)
        f = x[trunc.n_F : trunc.n_F + trunc.n_f]
        return cls(HardyVec2(F), HardyVec1(f), x[-1])

    @property
    def truncation_key(self):
        return (self.F.coeffs.shape, self.f.coeffs.shape)

    def truncation(self, tol=DEFAULT_TOL):
        m, k = self.F.coeffs.shape
        return Truncation(m - 1, k - 1, len(self.f.coeffs) - 1, tol)

    def to_array(self):
        return np.concatenate([self.F.coeffs.ravel(), self.f.coeffs, [self.alpha]])

    def norm(self):
        return float(np.sqrt(self.F.norm() ** 2 + self.f.norm() ** 2 + abs(self.alpha) ** 2))

    def _check(self, other):
        if self.truncation_key != other.truncation_key:
            raise DimensionError(
                f"state vectors on different truncations: {self.truncation_key} vs {other.truncation_key}"
            )

    def __add__(self, other):
        self._check(other)
        return StateVec(self.F + other.F, self.f + other.f, self.alpha + other.alpha)

    def __sub__(self, other):
        self._check(other)
        return StateVec(self.F - other.F, self.f - other.f, self.alpha - other.alpha)

    def __mul__(self, c):
        return StateVec(self.F * c, self.f * c, self.alpha * c)

    __rmul__ = __mul__


def _same_shape(a, b):
    if a.shape != b.shape:
        raise DimensionError(f"coefficient shapes differ: {a.shape} vs {b.shape}")


def fit_coeffs(a, n, tol=DEFAULT_TOL):
    """Copy a 1-d coefficient array into length ``n``.

    Entries past ``n`` are dropped only when their l2 mass is at most ``tol``.
    """
    a = np.asarray(a, dtype=complex)
    out = np.zeros(n, dtype=complex)
    keep = min(n, len(a))
    out[:keep] = a[:keep]
    lost = float(np.linalg.norm(a[keep:]))
    if lost > tol:
        raise TruncationError(
            f"{len(a) - keep} coefficients beyond degree {n - 1} carry mass {lost:.3e}", lost
        )
    return out


def inner_state(x, y):
    """Direct-sum inner product <x, y>, linear in ``x``."""
    x._check(y)
    return x.F.inner(y.F) + x.f.inner(y.f) + x.alpha * np.conj(y.alpha)


def embed_J(f, trunc):
    """``(Jf)(z1, z2) = f(z2)``: copy ``f`` into the ``m = 0`` row."""
    F = np.zeros(trunc.shape_F, dtype=complex)
    F[0, :] = fit_coeffs(f.coeffs, trunc.deg_z2 + 1, trunc.tol)
    return HardyVec2(F)


def adjoint_J(F):
    """``J*``: the ``m = 0`` row of ``F``, read as a function of one variable."""
    return HardyVec1(F.coeffs[0, :].copy())


def embed_i_z1(f, trunc):
    """``(i_{z1} f)(z1, z2) = f(z1)``: copy ``f`` into the ``k = 0`` column."""
    F = np.zeros(trunc.shape_F, dtype=complex)
    F[:, 0] = fit_coeffs(f.coeffs, trunc.deg_z1 + 1, trunc.tol)
    return HardyVec2(F)


def lift_z2(f, trunc):
    """``z1^0 f(z2)`` -- the same map as ``embed_J``, named for subspace code."""
    return embed_J(f, trunc)


def tensor(u, v, trunc):
    """``u(z1) v(z2)`` as a bidisk vector."""
    a = fit_coeffs(u.coeffs, trunc.deg_z1 + 1, trunc.tol)
    b = fit_coeffs(v.coeffs, trunc.deg_z2 + 1, trunc.tol)
    return HardyVec2(np.outer(a, b))


def hpoly(m, trunc):
    """Complete homogeneous sum ``h_m = sum_{a+b=m} z1^a z2^b`` (zero for m < 0)."""
    F = np.zeros(trunc.shape_F, dtype=complex)
    if m < 0:
        return HardyVec2(F)
    if m > min(trunc.deg_z1, trunc.deg_z2):
        raise TruncationError(
            f"h_{m} needs degree {m} in both variables; truncation is "
            f"({trunc.deg_z1}, {trunc.deg_z2})",
            np.sqrt(m + 1),
        )
    a = np.arange(m + 1)
    F[a, m - a] = 1.0
    return HardyVec2(F)


def swap_symmetry_residual(F):
    """``||F - F o swap||`` with swap exchanging ``z1`` and ``z2``."""
    a = F.coeffs
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"swap symmetry needs a square truncation, got {a.shape}")
    return float(np.linalg.norm(a - a.T))


def mul_z(f, tol=DEFAULT_TOL):
    """Unilateral shift ``S f = z f`` at fixed truncation."""
    a = f.coeffs
    if abs(a[-1]) > tol:
        raise TruncationError(
            f"z*f overflows degree {len(a) - 1}: top coefficient {abs(a[-1]):.3e}", abs(a[-1])
        )
    out = np.zeros_like(a)
    out[1:] = a[:-1]
    return HardyVec1(out)


def mul_z1(F, tol=DEFAULT_TOL):
    """``M_{z1} F`` at fixed truncation."""
    a = F.coeffs
    lost = float(np.linalg.norm(a[-1, :]))
    if lost > tol:
        raise TruncationError(f"z1*F overflows z1-degree {a.shape[0] - 1}: lost mass {lost:.3e}", lost)
    out = np.zeros_like(a)
    out[1:, :] = a[:-1, :]
    return HardyVec2(out)


def backward_shift(f):
    """``S* f``; exact at any truncation."""
    out = np.zeros_like(f.coeffs)
    out[:-1] = f.coeffs[1:]
    return HardyVec1(out)


def backward_shift_z1(F):
    """``M_{z1}* F``; exact at any truncation."""
    out = np.zeros_like(F.coeffs)
    out[:-1, :] = F.coeffs[1:, :]
    return HardyVec2(out)


def flat_labels(trunc):
    """Human-readable descriptor of every flat coordinate, in layout order."""
    labels = [f"F[{m},{k}]" for m in range(trunc.deg_z1 + 1) for k in range(trunc.deg_z2 + 1)]
    labels += [f"f[{k}]" for k in range(trunc.deg_z + 1)]
    labels.append("alpha")
    return labels


def pad_flat(X, src, dst):
    """Re-embed flat vectors (columns of ``X``) from truncation ``src`` into ``dst``.

    ``dst`` must dominate ``src`` in every degree.
    """
    if dst.deg_z1 < src.deg_z1 or dst.deg_z2 < src.deg_z2 or dst.deg_z < src.deg_z:
        raise DimensionError("target truncation must dominate the source")
    X = np.asarray(X, dtype=complex)
    vec = X.ndim == 1
    if vec:
        X = X[:, None]
    r = X.shape[1]
    out = np.zeros((dst.dim, r), dtype=complex)
    F = X[: src.n_F].reshape(src.deg_z1 + 1, src.deg_z2 + 1, r)
    outF = out[: dst.n_F].reshape(dst.deg_z1 + 1, dst.deg_z2 + 1, r)
    outF[: src.deg_z1 + 1, : src.deg_z2 + 1] = F
    out[dst.n_F : dst.n_F + src.n_f] = X[src.n_F : src.n_F + src.n_f]
    out[-1] = X[-1]
    return out[:, 0] if vec else out


def block_masks(trunc):
    """Boolean masks over flat coordinates: (first coordinate, disk part, scalar)."""
    first = np.zeros(trunc.dim, dtype=bool)
    first[: trunc.n_F] = True
    disk = np.zeros(trunc.dim, dtype=bool)
    disk[trunc.n_F : trunc.n_F + trunc.n_f] = True
    scalar = np.zeros(trunc.dim, dtype=bool)
    scalar[-1] = True
    return first, disk, scalar
