"""Growth of ``T^n``, decay of the normalized powers, and the Krylov experiment for ``e3``.

The normalized operator is ``T / sqrt(1 + sigma^2)``.  Adjoint orbits never
raise degree, so they run at any truncation; forward orbits stop at the
first step that would push mass past the truncation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import TruncationError
from .hardy import HardyVec1, HardyVec2, StateVec, Truncation, swap_symmetry_residual
from .linalg import mgs, subspace_distance
from .operators import apply_B, apply_T, apply_T_adjoint, e3_orbit_norm_sq

FORWARD = "forward"
ADJOINT_LABELS = ("adjoint-case1", "adjoint-case2", "adjoint-case3")


@dataclass
class DecayCurve:
    n_values: np.ndarray
    norms: np.ndarray
    envelope: np.ndarray
    label: str
    meta: dict = field(default_factory=dict)

    def within_envelope(self, tol=1e-12):
        return bool(np.all(self.norms <= self.envelope * (1 + tol) + tol))

    def rows(self):
        return [
            (int(n), float(a), float(b), self.label)
            for n, a, b in zip(self.n_values, self.norms, self.envelope)
        ]


def case_label(x, tol=0.0):
    """Proof case of ``x``: scalar only (1), disk part but no bidisk part (2), else (3)."""
    if np.any(np.abs(x.F.coeffs) > tol):
        return ADJOINT_LABELS[2]
    if np.any(np.abs(x.f.coeffs) > tol):
        return ADJOINT_LABELS[1]
    return ADJOINT_LABELS[0]


def case_vectors(max_degree, trunc):
    """Every monomial vector of the three cases with degrees at most ``max_degree``."""
    out = [("alpha", StateVec.e3(trunc))]
    for k in range(max_degree + 1):
        x = StateVec.zeros(trunc)
        out.append((f"z^{k}", StateVec(x.F, HardyVec1.monomial(k, trunc.deg_z), 0.0)))
    for m in range(max_degree + 1):
        for k in range(max_degree + 1):
            x = StateVec.zeros(trunc)
            out.append((f"z1^{m} z2^{k}", StateVec(HardyVec2.monomial(m, k, trunc), x.f, 0.0)))
    return out


# ---------------------------------------------------------------------------
# power growth


@dataclass
class PowerTable:
    rows: list
    sigma: float

    @property
    def inequality_holds(self):
        return all(r["norm_sq"] >= r["lower_bound"] * (1 - 1e-15) for r in self.rows)

    @property
    def strictly_increasing(self):
        v = [r["norm_sq"] for r in self.rows]
        return all(b > a for a, b in zip(v, v[1:]))


def power_unbounded_certificate(p, n_max, trunc=None):
    """``||T^n e3||^2`` by direct application next to ``1 + n sigma^2`` and the closed form."""
    trunc = Truncation.cube(max(n_max, 1)) if trunc is None else trunc
    x = StateVec.e3(trunc)
    rows = []
    s2 = p.sigma**2
    for n in range(n_max + 1):
        if n:
            try:
                x = apply_T(p, x, trunc.tol)
            except TruncationError as exc:
                raise TruncationError(
                    f"T^{n} e3 overflows truncation {trunc.degrees()}; max safe n is {n - 1}",
                    exc.lost_mass,
                    n,
                ) from exc
        nsq = x.norm() ** 2
        rows.append(
            {
                "n": n,
                "norm_sq": nsq,
                "lower_bound": 1 + n * s2,
                "closed_form": e3_orbit_norm_sq(p, n),
                "excess": nsq - (1 + n * s2),
            }
        )
    return PowerTable(rows, p.sigma)


# ---------------------------------------------------------------------------
# C00 decay


def c00_adjoint_decay(p, x, n_max):
    """``||T~^{*n} x||`` for ``n = 0..n_max`` with envelope ``C_x (1 + sigma^2)^{-n/2}``.

    ``C_x`` is the measured maximum of the un-normalized adjoint orbit norms.
    """
    raw = np.empty(n_max + 1)
    y = x
    for n in range(n_max + 1):
        if n:
            y = apply_T_adjoint(p, y)
        raw[n] = y.norm()
    scale = (1 + p.sigma**2) ** (-np.arange(n_max + 1) / 2)
    C = float(raw.max())
    return DecayCurve(
        n_values=np.arange(n_max + 1),
        norms=raw * scale,
        envelope=C * scale,
        label=case_label(x),
        meta={"C_x": C, "raw_norms": raw},
    )


def forward_envelope(p, x, n):
    """``(||F|| + sqrt(1 + sigma^2 n) ||f|| + ||T^n e3|| |alpha|) / (1 + sigma^2)^{n/2}``."""
    n = np.asarray(n)
    s2 = p.sigma**2
    orbit = np.sqrt(1 + n * s2 + s2**2 * n * (n - 1) / 2)
    num = x.F.norm() + np.sqrt(1 + s2 * n) * x.f.norm() + orbit * abs(x.alpha)
    return num / (1 + s2) ** (n / 2)


def c00_forward_decay(p, x, n_max, strict=True):
    """``||T~^n x||`` for ``n = 0..n_max`` with the triangle-inequality envelope.

    When a step would overflow the truncation, ``strict`` raises naming the
    largest safe ``n``; otherwise the curve stops there and ``meta['cap']``
    records it.
    """
    tol = x.truncation().tol
    norms = [x.norm()]
    y = x
    cap = n_max
    for n in range(1, n_max + 1):
        try:
            y = apply_T(p, y, tol)
        except TruncationError as exc:
            if strict:
                raise TruncationError(
                    f"forward orbit leaves truncation {x.truncation().degrees()} at n = {n}; "
                    f"max safe n is {n - 1}",
                    exc.lost_mass,
                    n,
                ) from exc
            cap = n - 1
            break
        norms.append(y.norm())
    n_values = np.arange(len(norms))
    norms = np.array(norms) * (1 + p.sigma**2) ** (-n_values / 2)
    return DecayCurve(
        n_values=n_values,
        norms=norms,
        envelope=forward_envelope(p, x, n_values),
        label=FORWARD,
        meta={"cap": cap, "capped": cap < n_max},
    )


# ---------------------------------------------------------------------------
# Krylov experiment


@dataclass
class KrylovReport:
    n_max: int
    symmetry_residuals: np.ndarray
    witness_inner: np.ndarray
    witness_distance: float
    krylov_rank: int
    b_ranks: list

    @property
    def max_symmetry_residual(self):
        return float(np.max(self.symmetry_residuals))

    @property
    def max_witness_inner(self):
        return float(np.max(np.abs(self.witness_inner)))

    def checks(self, tol_sym=1e-13, tol_dist=1e-10):
        return {
            "symmetric_first_coordinates": self.max_symmetry_residual <= tol_sym,
            "witness_orthogonal": self.max_witness_inner <= tol_sym,
            "witness_distance_one": abs(self.witness_distance - 1) <= tol_dist,
            "b_orbit_full_rank": all(r == n + 1 for n, r in self.b_ranks),
        }


def antisymmetric_witness(trunc):
    """``(z1 - z2, 0, 0) / sqrt(2)``."""
    F = np.zeros(trunc.shape_F, dtype=complex)
    F[1, 0], F[0, 1] = 1, -1
    return StateVec(HardyVec2(F / math.sqrt(2)), HardyVec1.zeros(trunc.deg_z), 0.0)


def e3_orbit(p, n_max, trunc):
    x = StateVec.e3(trunc)
    out = [x]
    for _ in range(n_max):
        x = apply_T(p, x, trunc.tol)
        out.append(x)
    return out


def b_krylov_rank(p, n, tol=1e-10):
    """Rank of ``span{B^k (0, 1) : k = 0..n}`` inside ``P_{n-1} H2 + C`` (dimension ``n + 1``)."""
    f, a = HardyVec1.zeros(max(n - 1, 0)), 1.0 + 0j
    cols = []
    for k in range(n + 1):
        cols.append(np.append(f.coeffs, a))
        if k < n:
            f, a = apply_B(p, f, a)
    _, kept = mgs(np.column_stack(cols), rank_tol=tol)
    return len(kept)


def krylov_noncyclicity(p, n_max, trunc=None, b_sizes=None):
    """Symmetry, witness orthogonality and witness distance for the orbit of ``e3``."""
    trunc = Truncation.cube(max(n_max, 2)) if trunc is None else trunc
    orbit = e3_orbit(p, n_max, trunc)
    sym = np.array([swap_symmetry_residual(x.F) for x in orbit])
    w = antisymmetric_witness(trunc)
    wa = w.to_array()
    X = np.column_stack([x.to_array() for x in orbit])
    inner = X.conj().T @ wa
    Q, kept = mgs(X, rank_tol=1e-12)
    dist = subspace_distance(wa, Q)
    sizes = range(1, n_max + 1) if b_sizes is None else b_sizes
    b_ranks = [(n, b_krylov_rank(p, n)) for n in sizes]
    return KrylovReport(n_max, sym, inner, dist, len(kept), b_ranks)
