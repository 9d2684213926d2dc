"""Type I/II subspaces of B and lifted Type I/II subspaces of T.

A lifted subspace is assembled from labelled raw vectors

* ``phi-block``     ``z1^m phi(z2) z2^k``           first coordinate
* ``g-block``       ``z1^m g(z2) / ||g||``          first coordinate, Type II
* ``psi-block``     ``b(z1) z1^i v_j(z2)``          first coordinate
* ``M1-phi-block``  ``(0, phi z^k, 0)``
* ``M1-line``       ``(0, g, 1) / sqrt(1 + ||g||^2)``, Type II

where ``Psi(z) = b(z) V`` with ``V`` the isometry whose columns are ``v_j``.
Ranges are cut where truncating the true vector would lose more than ``tol``
of mass.  A vector is *safe* when one application of ``T`` keeps it inside
the listed family; only safe vectors are used for invariance, norms and
intertwining checks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConditioningError, StructuralError, ValidationError
from .hardy import HardyVec1, StateVec, Truncation, fit_coeffs, pad_flat
from .inner import (
    BlaschkeProduct,
    GFunction,
    accurate_range,
    g_function,
    model_space_basis,
    taylor_coeffs,
)
from .linalg import mgs, orthonormality_defect
from .operators import BrownianParams, t_matrix

TYPE_I = "TypeI"
TYPE_II = "TypeII"

PHI = "phi-block"
G_BLOCK = "g-block"
PSI = "psi-block"
M1_PHI = "M1-phi-block"
M1_LINE = "M1-line"

FIRST_TAGS = (PHI, G_BLOCK, PSI)
LOWER_TAGS = (M1_PHI, M1_LINE)


@dataclass(frozen=True, eq=False)
class InnerMultiplier:
    """``Psi(z) = b(z) V``: scalar Blaschke factor times a constant isometry into ``K_phi``."""

    scalar_factor: BlaschkeProduct = field(default_factory=BlaschkeProduct)
    isometry_cols: tuple = ()

    def __post_init__(self):
        cols = tuple(c if isinstance(c, HardyVec1) else HardyVec1(c) for c in self.isometry_cols)
        object.__setattr__(self, "isometry_cols", cols)

    @property
    def rank(self):
        return len(self.isometry_cols)

    def value_at_zero(self):
        return complex(self.scalar_factor(0.0))

    def column_matrix(self, deg, tol):
        if not self.isometry_cols:
            return np.zeros((deg + 1, 0), dtype=complex)
        return np.column_stack([fit_coeffs(c.coeffs, deg + 1, tol) for c in self.isometry_cols])

    def validate(self, phi, trunc):
        """Columns orthonormal and inside ``K_phi`` (at degree ``deg_z2``)."""
        if self.rank == 0:
            return
        tol = trunc.tol
        Vm = self.column_matrix(trunc.deg_z2, tol)
        defect = orthonormality_defect(Vm)
        if defect > tol:
            raise ValidationError(f"isometry columns are not orthonormal (Gram defect {defect:.3e})")
        K = model_space_basis(phi, Truncation(trunc.deg_z1, trunc.deg_z2, trunc.deg_z2, tol))
        for j, c in enumerate(self.isometry_cols):
            r = K.residual(c)
            if r > tol:
                raise ValidationError(f"isometry column {j} leaves K_phi (residual {r:.3e})")


@dataclass(frozen=True, eq=False)
class LiftedSubspaceSpec:
    kind: str
    phi: BlaschkeProduct
    psi: InnerMultiplier
    params: BrownianParams
    g: GFunction | None = None

    def __post_init__(self):
        if self.kind not in (TYPE_I, TYPE_II):
            raise ValidationError(f"kind must be {TYPE_I!r} or {TYPE_II!r}, got {self.kind!r}")

    def g_at(self, deg, tol):
        if self.kind != TYPE_II:
            return None
        if self.g is not None and len(self.g.series.coeffs) >= deg + 1:
            return self.g
        return g_function(self.phi, self.params.sigma, self.params.theta, deg, tol)


def lifted_spec(kind, phi, sigma, theta=0.0, b=None, V=()):
    """Convenience constructor: ``V`` is a list of coefficient sequences in ``K_phi``."""
    cols = tuple(HardyVec1(np.asarray(v, dtype=complex)) for v in V)
    return LiftedSubspaceSpec(
        kind, phi, InnerMultiplier(b or BlaschkeProduct(), cols), BrownianParams(sigma, theta)
    )


@dataclass(frozen=True, eq=False)
class SubspaceBasis:
    """Orthonormal columns ``Q`` (flat layout) with per-column tag, label and safety flag.

    ``raw`` holds the analytic vectors before orthonormalization, in the same
    order; ``Q`` is their modified Gram-Schmidt orthonormalization.
    """

    Q: np.ndarray
    raw: np.ndarray
    tags: tuple
    labels: tuple
    safe: np.ndarray
    safe_degree: int
    trunc: Truncation
    kind: str | None = None
    meta: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.Q.shape[1]

    @property
    def vectors(self):
        return [StateVec.from_array(self.Q[:, j], self.trunc) for j in range(self.dim)]

    def indices(self, tags):
        if isinstance(tags, str):
            tags = (tags,)
        return np.array([j for j, t in enumerate(self.tags) if t in tags], dtype=int)

    def label_index(self):
        return {lab: j for j, lab in enumerate(self.labels)}

    def seed_vector(self):
        idx = self.label_index()
        for lab in ((M1_PHI, 0), (M1_LINE,)):
            if lab in idx:
                return self.raw[:, idx[lab]]
        return None

    def projector_residual(self, X):
        """``(I - Q Q^H) X`` for flat vectors in the basis truncation."""
        return X - self.Q @ (self.Q.conj().T @ X)

    @classmethod
    def from_vectors(cls, vectors, tags, trunc, safe=None, labels=None, kind=None, meta=None):
        """Orthonormalize arbitrary state vectors into a basis (no analytic checks)."""
        raw = np.column_stack([v.to_array() if isinstance(v, StateVec) else np.asarray(v) for v in vectors])
        Q, kept = mgs(raw, rank_tol=trunc.tol)
        if len(kept) != raw.shape[1]:
            raise ConditioningError(f"vectors are linearly dependent ({len(kept)} of {raw.shape[1]} kept)")
        n = raw.shape[1]
        safe = np.ones(n, dtype=bool) if safe is None else np.asarray(safe, dtype=bool)
        labels = tuple(labels) if labels is not None else tuple((t, j) for j, t in enumerate(tags))
        return cls(Q, raw, tuple(tags), labels, safe, trunc.deg_z1 - 1, trunc, kind, dict(meta or {}))


# ---------------------------------------------------------------------------
# raw vector construction


def _flat(trunc, F=None, f=None, alpha=0.0):
    x = np.zeros(trunc.dim, dtype=complex)
    if F is not None:
        x[: trunc.n_F] = F.ravel()
    if f is not None:
        x[trunc.n_F : trunc.n_F + trunc.n_f] = f
    x[-1] = alpha
    return x


def _shifted(c, k, n):
    """``z^k c(z)`` cut to length ``n`` (caller guarantees the cut is below tol)."""
    out = np.zeros(n, dtype=complex)
    if k < n:
        out[k:] = c[: n - k]
    return out


class _Builder:
    def __init__(self, trunc):
        self.trunc = trunc
        self.cols, self.tags, self.labels, self.safe = [], [], [], []

    def add(self, tag, label, x, safe):
        self.cols.append(x)
        self.tags.append(tag)
        self.labels.append(label)
        self.safe.append(bool(safe))

    def finish(self, kind, meta, check_cross=True):
        t = self.trunc
        if not self.cols:
            raise ValidationError("subspace has no vectors at this truncation")
        raw = np.column_stack(self.cols)
        G = raw.conj().T @ raw
        tags = np.array(self.tags)
        if check_cross:
            cross = tags[:, None] != tags[None, :]
            worst = float(np.max(np.abs(G[cross]))) if cross.any() else 0.0
            if worst > t.tol:
                i, j = np.unravel_index(np.argmax(np.where(cross, np.abs(G), 0)), G.shape)
                raise ValidationError(
                    f"summands {self.tags[i]!r} and {self.tags[j]!r} are not orthogonal "
                    f"(|<{self.labels[i]}, {self.labels[j]}>| = {worst:.3e})"
                )
        defect = float(np.max(np.abs(G - np.eye(G.shape[0]))))
        if defect > t.tol:
            raise ConditioningError(
                f"raw family is not orthonormal within tol={t.tol:g} (Gram defect {defect:.3e}); "
                "raise the truncation or move the zeros inward"
            )
        Q, kept = mgs(raw, rank_tol=t.tol)
        if len(kept) != raw.shape[1]:
            raise ConditioningError("raw family lost rank during orthonormalization")
        meta = dict(meta, gram_defect=defect)
        return SubspaceBasis(
            Q=Q,
            raw=raw,
            tags=tuple(self.tags),
            labels=tuple(self.labels),
            safe=np.array(self.safe, dtype=bool),
            safe_degree=t.deg_z1 - 1,
            trunc=t,
            kind=kind,
            meta=meta,
        )


def phi_range(phi, trunc):
    """Largest ``k`` with ``phi z^k`` representable within ``tol`` in both ``z`` and ``z2``."""
    return accurate_range(phi, min(trunc.deg_z, trunc.deg_z2), trunc.tol)


def psi_range(psi, trunc):
    """Largest ``i`` with ``b(z1) z1^i`` representable within ``tol``."""
    return accurate_range(psi.scalar_factor, trunc.deg_z1, trunc.tol)


def _add_B_blocks(B, phi, K, g, trunc):
    ph = taylor_coeffs(phi, trunc.deg_z).coeffs
    for k in range(K + 1):
        B.add(M1_PHI, (M1_PHI, k), _flat(trunc, f=_shifted(ph, k, trunc.n_f)), k < K)
    if g is not None:
        gz = fit_coeffs(g.series.coeffs, trunc.n_f, np.inf)
        nrm = math.sqrt(1 + g.norm**2)
        B.add(M1_LINE, (M1_LINE,), _flat(trunc, f=gz / nrm, alpha=1 / nrm), K >= 0)


def _resolve_K(phi, trunc, K):
    K = phi_range(phi, trunc) if K is None else int(K)
    if K < 0:
        raise ConditioningError(
            f"no multiple of phi is representable at truncation {trunc.degrees()} within tol={trunc.tol:g}; "
            f"zeros {list(phi.zeros)} need a larger degree"
        )
    return K


def _g_for(phi, params, trunc):
    deg = max(trunc.deg_z, trunc.deg_z2)
    g = g_function(phi, params.sigma, params.theta, deg, trunc.tol)
    if g.tail > trunc.tol:
        raise ConditioningError(
            f"g has tail mass {g.tail:.3e} beyond degree {deg}; raise the truncation"
        )
    return g


def build_typeI_B(phi, trunc, K=None):
    """``phi H2 + {0}`` embedded as ``(0, phi z^k, 0)``, ``k = 0..K``."""
    K = _resolve_K(phi, trunc, K)
    B = _Builder(trunc)
    _add_B_blocks(B, phi, K, None, trunc)
    return B.finish(TYPE_I, {"phi_range": K, "operator": "B"})


def build_typeII_B(phi, params, trunc, K=None):
    """``C (g, 1) + (phi H2 + {0})``."""
    K = _resolve_K(phi, trunc, K)
    g = _g_for(phi, params, trunc)
    B = _Builder(trunc)
    _add_B_blocks(B, phi, K, g, trunc)
    return B.finish(TYPE_II, {"phi_range": K, "g_norm": g.norm, "operator": "B"})


def check_constraint_A(spec, g, tol):
    """Reject ``Psi(0) E`` not inside ``g^perp`` (only binding when ``b(0) != 0``)."""
    if spec.psi.rank == 0 or abs(spec.psi.value_at_zero()) <= tol:
        return
    gc = g.series.coeffs
    for j, c in enumerate(spec.psi.isometry_cols):
        n = min(len(gc), len(c.coeffs))
        ip = abs(np.vdot(gc[:n], c.coeffs[:n]))
        if ip > tol:
            raise ValidationError(
                f"constraint (A) violated: Psi(0)E_M must lie in g^perp inside K_phi, "
                f"but column {j} has |<v_j, g>| = {ip:.3e} with b(0) = {spec.psi.value_at_zero():.6g}"
            )


def build_lifted(spec, trunc, K=None, I=None):
    """Lifted Type I or Type II subspace of ``T`` for ``spec`` at ``trunc``.

    ``K`` and ``I`` override the ``phi`` and ``b`` ranges (used to give two
    bases the same labelled structure).
    """
    t = trunc
    phi, psi, params = spec.phi, spec.psi, spec.params
    K = _resolve_K(phi, t, K)
    psi.validate(phi, t)
    g = None
    if spec.kind == TYPE_II:
        g = _g_for(phi, params, t)
        check_constraint_A(spec, g, t.tol)
    M = t.deg_z1
    B = _Builder(t)
    ph = taylor_coeffs(phi, t.deg_z2).coeffs
    for m in range(M + 1):
        for k in range(K + 1):
            F = np.zeros(t.shape_F, dtype=complex)
            F[m, :] = _shifted(ph, k, t.deg_z2 + 1)
            B.add(PHI, (PHI, m, k), _flat(t, F=F), m < M)
    if g is not None and g.norm > t.tol:
        gz2 = fit_coeffs(g.series.coeffs, t.deg_z2 + 1, t.tol) / g.norm
        for m in range(M + 1):
            F = np.zeros(t.shape_F, dtype=complex)
            F[m, :] = gz2
            B.add(G_BLOCK, (G_BLOCK, m), _flat(t, F=F), m < M)
    if psi.rank:
        Ival = psi_range(psi, t) if I is None else int(I)
        if Ival < 0:
            raise ConditioningError(
                f"b(z1) z1^i is not representable at deg_z1={M}; zeros {list(psi.scalar_factor.zeros)}"
            )
        bc = taylor_coeffs(psi.scalar_factor, M).coeffs
        Vm = psi.column_matrix(t.deg_z2, t.tol)
        for j in range(psi.rank):
            for i in range(Ival + 1):
                F = np.outer(_shifted(bc, i, M + 1), Vm[:, j])
                B.add(PSI, (PSI, i, j), _flat(t, F=F), i < Ival)
    else:
        Ival = -1
    _add_B_blocks(B, phi, K, g if (g is not None and g.norm > t.tol) else None, t)
    meta = {"phi_range": K, "psi_range": Ival, "rank": psi.rank, "operator": "T"}
    if g is not None:
        meta["g_norm"] = g.norm
        meta["boundary_value"] = g.boundary_value
    return B.finish(spec.kind, meta)


def build_lifted_typeI(spec, trunc, K=None, I=None):
    if spec.kind != TYPE_I:
        raise ValidationError(f"expected a {TYPE_I} spec, got {spec.kind}")
    return build_lifted(spec, trunc, K, I)


def build_lifted_typeII(spec, trunc, K=None, I=None):
    if spec.kind != TYPE_II:
        raise ValidationError(f"expected a {TYPE_II} spec, got {spec.kind}")
    return build_lifted(spec, trunc, K, I)


def build_matched(specA, specB, trunc):
    """Bases for two specs with common ``phi`` and ``b`` ranges."""
    K = min(_resolve_K(specA.phi, trunc, None), _resolve_K(specB.phi, trunc, None))
    IA = psi_range(specA.psi, trunc) if specA.psi.rank else -1
    IB = psi_range(specB.psi, trunc) if specB.psi.rank else -1
    I = min(i for i in (IA, IB) if i >= 0) if max(IA, IB) >= 0 else None
    return build_lifted(specA, trunc, K, I), build_lifted(specB, trunc, K, I)


# ---------------------------------------------------------------------------
# checks


def _operator_matrix(p, trunc, operator):
    ext = trunc.raised(1)
    M = t_matrix(p, trunc, ext).entries
    if operator == "B":
        # P T = B P: drop the first coordinate of the image
        keep = np.ones(ext.dim)
        keep[: ext.n_F] = 0
        M = M.multiply(keep[:, None]).tocsr()
    elif operator != "T":
        raise ValueError(f"operator must be 'T' or 'B', got {operator!r}")
    return M, ext


def invariance_residual(p, basis, operator="T"):
    """``max ||(I - P_M) T v||`` over the safe basis vectors ``v``.

    ``T`` is applied exactly (into a truncation one degree larger), so mass
    that escapes the truncation counts against invariance.
    """
    t = basis.trunc
    Qs = basis.Q[:, basis.safe]
    if Qs.shape[1] == 0:
        return 0.0
    M, ext = _operator_matrix(p, t, operator)
    W = M @ Qs
    P = pad_flat(basis.Q, t, ext)
    R = W - P @ (P.conj().T @ W)
    return float(np.max(np.linalg.norm(R, axis=0)))


def _mul_z1_flat(X, trunc, ext):
    """``z1 * F`` on flat columns, first coordinate only, into ``ext``."""
    r = X.shape[1]
    F = X[: trunc.n_F].reshape(trunc.deg_z1 + 1, trunc.deg_z2 + 1, r)
    out = np.zeros((ext.dim, r), dtype=complex)
    outF = out[: ext.n_F].reshape(ext.deg_z1 + 1, ext.deg_z2 + 1, r)
    outF[1 : trunc.deg_z1 + 2, : trunc.deg_z2 + 1] = F
    return out


def wandering_dimension(basis, block_filter, trunc=None, gap=(1e-6, 0.5)):
    """Dimension of ``N minus z1 N`` for the z1-invariant block selected by tag.

    ``z1 N`` is spanned by ``z1`` times the safe block vectors; the result is
    the numerical rank of the block projected off that span.  Singular values
    between ``gap[0]`` and ``gap[1]`` make the rank ambiguous and raise.
    """
    t = basis.trunc if trunc is None else trunc
    sel = basis.indices(block_filter)
    if sel.size == 0:
        return 0
    ext = t.raised(1)
    Qb = basis.Q[:, sel]
    Z = _mul_z1_flat(Qb[:, basis.safe[sel]], t, ext)
    P = pad_flat(Qb, t, ext)
    if Z.shape[1]:
        U, s, _ = np.linalg.svd(Z, full_matrices=False)
        U = U[:, s > 1e-12]
        P = P - U @ (U.conj().T @ P)
    s = np.linalg.svd(P, compute_uv=False)
    ambiguous = s[(s > gap[0]) & (s < gap[1])]
    if ambiguous.size:
        raise ConditioningError(
            f"wandering rank ambiguous: singular values {ambiguous} between {gap[0]:g} and {gap[1]:g}"
        )
    return int(np.sum(s >= gap[1]))
