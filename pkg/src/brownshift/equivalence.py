"""Unitary-equivalence invariants, the decision rule, and explicit intertwiners.

Two restrictions ``T_A|M`` and ``T_B|N`` to lifted subspaces are unitarily
equivalent exactly when ``sigma``, ``dim E`` and the kind agree and, for
Type II, ``e^{i theta}`` and ``||g||`` agree as well.  The intertwiner built
here matches basis vectors label by label, with the phases forced by the
coupling between the first and lower coordinates:

* phi-block and M1-phi-block get the same phase ``lambda``;
* g-block and M1-line get the same phase ``beta``;
* for Type II, ``lambda conj(c_A) = beta conj(c_B)`` with ``c = phi(e^{i theta})``.

We take ``beta = 1``, so ``lambda = c_A conj(c_B)`` (``lambda = 1`` for Type I).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import StructuralError, ValidationError
from .hardy import pad_flat
from .inner import eval_boundary, g_function
from .linalg import orthonormality_defect
from .operators import restricted_norm, t_matrix
from .subspaces import (
    FIRST_TAGS,
    G_BLOCK,
    LOWER_TAGS,
    M1_LINE,
    M1_PHI,
    PHI,
    PSI,
    TYPE_II,
    _mul_z1_flat,
    wandering_dimension,
)

SIGMA_TOL = 1e-6
GNORM_TOL = 1e-6
THETA_TOL = 1e-9

OBSTRUCTIONS = ("sigma", "kind", "theta", "g_norm", "dim_E")


@dataclass(frozen=True)
class EquivalenceInvariants:
    sigma_from_norm: float
    kind: str
    theta: float | None
    g_norm: float | None
    dim_E: int

    def as_dict(self):
        return {
            "sigma_from_norm": self.sigma_from_norm,
            "kind": self.kind,
            "theta": self.theta,
            "g_norm": self.g_norm,
            "dim_E": self.dim_E,
        }


def extract_invariants(spec, basis):
    """Read the invariants off a constructed basis.

    ``sigma`` comes from the restricted norm ``sqrt(1 + sigma^2)`` and
    ``dim E`` from the wandering dimension of the psi-block.
    """
    nrm = restricted_norm(spec.params, basis)
    sigma = math.sqrt(max(nrm**2 - 1.0, 0.0))
    theta = g_norm = None
    if spec.kind == TYPE_II:
        theta = spec.params.theta
        deg = max(basis.trunc.deg_z, basis.trunc.deg_z2)
        g_norm = g_function(spec.phi, spec.params.sigma, theta, deg, basis.trunc.tol).norm
    return EquivalenceInvariants(sigma, spec.kind, theta, g_norm, wandering_dimension(basis, PSI))


@dataclass(frozen=True)
class Verdict:
    equivalent: bool
    obstructions: tuple
    details: dict = field(default_factory=dict)


def decide_equivalence(invA, invB, sigma_tol=SIGMA_TOL, g_tol=GNORM_TOL, theta_tol=THETA_TOL):
    """Compare invariants; ``obstructions`` lists every violated condition in a fixed order."""
    found = []
    details = {"sigma": abs(invA.sigma_from_norm - invB.sigma_from_norm)}
    if details["sigma"] > sigma_tol:
        found.append("sigma")
    if invA.kind != invB.kind:
        found.append("kind")
    elif invA.kind == TYPE_II:
        gap = abs(np.exp(1j * invA.theta) - np.exp(1j * invB.theta))
        details["theta"] = float(gap)
        if gap > theta_tol:
            found.append("theta")
        details["g_norm"] = abs(invA.g_norm - invB.g_norm)
        if details["g_norm"] > g_tol:
            found.append("g_norm")
    if invA.dim_E != invB.dim_E:
        found.append("dim_E")
    return Verdict(not found, tuple(found), details)


# ---------------------------------------------------------------------------
# intertwiner


@dataclass(frozen=True, eq=False)
class IntertwinerBundle:
    """``U = Q_B U_coords Q_A^H`` with ``U_coords`` the label-matching map.

    ``U1_block`` / ``U2_block`` are the A-coordinate indices of the
    first-coordinate and lower tags.  ``beta`` is the scale on the
    unnormalized line, ``U (g_A, 1) = beta (g_B, 1)``.
    """

    U: np.ndarray
    U_coords: np.ndarray
    U1_block: np.ndarray
    U2_block: np.ndarray
    lam: complex
    beta: complex
    basisA: object
    basisB: object
    W: np.ndarray
    phases: dict


def _check_labels(basisA, basisB):
    if basisA.dim != basisB.dim or set(basisA.labels) != set(basisB.labels):
        extra = sorted(map(str, set(basisA.labels) ^ set(basisB.labels)))[:6]
        raise StructuralError(
            f"bases do not share tag structure ({basisA.dim} vs {basisB.dim} vectors; "
            f"unmatched labels e.g. {extra})"
        )
    if not np.array_equal(basisA.safe, basisB.safe[[basisB.label_index()[l] for l in basisA.labels]]):
        raise StructuralError("bases disagree on which labels are safe")


def label_map(basisA, basisB, phases=None):
    """Coordinate matrix sending each A label to the same B label times ``phases[tag]``."""
    _check_labels(basisA, basisB)
    phases = phases or {}
    idxB = basisB.label_index()
    Uc = np.zeros((basisB.dim, basisA.dim), dtype=complex)
    for j, lab in enumerate(basisA.labels):
        Uc[idxB[lab], j] = phases.get(basisA.tags[j], 1.0)
    return Uc


def _line_norm(basis):
    g = basis.meta.get("g_norm")
    return math.sqrt(1 + g**2) if g is not None else None


def build_intertwiner(specA, basisA, specB, basisB, lam=None):
    """Explicit unitary intertwiner between two equivalent lifted subspaces.

    ``lam`` overrides the phi-block phase; for Type II the line phase is then
    moved with it so that ``lam conj(c_A) = beta conj(c_B)`` keeps holding.
    """
    if specA.kind != specB.kind:
        raise StructuralError(f"kinds differ: {specA.kind} vs {specB.kind}")
    if specA.kind == TYPE_II:
        cA = eval_boundary(specA.phi, specA.params.theta)
        cB = eval_boundary(specB.phi, specB.params.theta)
        lam0 = cA * np.conj(cB)
    else:
        cA = cB = 1.0
        lam0 = 1.0
    lam = complex(lam0 if lam is None else lam)
    if abs(abs(lam) - 1) > 1e-12:
        raise ValidationError(f"lambda must be unimodular, got |lambda| = {abs(lam)!r}")
    # beta_phase conj(c_B) = lam conj(c_A)
    beta_phase = complex(lam * np.conj(cA) / np.conj(cB)) if specA.kind == TYPE_II else 1.0
    phases = {PHI: lam, M1_PHI: lam, G_BLOCK: beta_phase, M1_LINE: beta_phase, PSI: 1.0}
    Uc = label_map(basisA, basisB, phases)
    U = basisB.Q @ Uc @ basisA.Q.conj().T
    beta = beta_phase
    if specA.kind == TYPE_II:
        beta = beta_phase * _line_norm(basisA) / _line_norm(basisB)
    return IntertwinerBundle(
        U=U,
        U_coords=Uc,
        U1_block=basisA.indices(FIRST_TAGS),
        U2_block=basisA.indices(LOWER_TAGS),
        lam=lam,
        beta=complex(beta),
        basisA=basisA,
        basisB=basisB,
        W=np.eye(specA.psi.rank, dtype=complex),
        phases=phases,
    )


def rotate_phase(bundle, specA, specB, phase):
    """The bundle with ``lambda`` (and the linked line phase) multiplied by ``phase``."""
    return build_intertwiner(specA, bundle.basisA, specB, bundle.basisB, bundle.lam * phase)


# ---------------------------------------------------------------------------
# verification


def _coords(U, basisA, basisB):
    """Accept a bundle, a flat matrix, or coordinates; return ``U_coords``."""
    if isinstance(U, IntertwinerBundle):
        return U.U_coords
    U = np.asarray(U)
    if U.shape == (basisB.dim, basisA.dim):
        return U
    return basisB.Q.conj().T @ U @ basisA.Q


def unitarity_defect(U, basisA=None, basisB=None):
    Uc = U.U_coords if isinstance(U, IntertwinerBundle) else _coords(U, basisA, basisB)
    if Uc.shape[0] != Uc.shape[1]:
        return 1.0
    return max(orthonormality_defect(Uc), orthonormality_defect(Uc.conj().T))


def _image_columns(p, basis, X):
    """Exact ``T`` of flat columns ``X`` (basis truncation) into the raised truncation."""
    ext = basis.trunc.raised(1)
    return t_matrix(p, basis.trunc, ext).entries @ X, ext


def _transport(Uc, basisA, basisB, Y, extA, extB):
    """Apply ``U`` to vectors ``Y`` of M_A given in ``extA``.

    The component of ``Y`` outside ``M_A`` has no image; its norm is
    returned separately so callers can count it as residual.
    """
    PA = pad_flat(basisA.Q, basisA.trunc, extA)
    coeff = PA.conj().T @ Y
    leak = np.linalg.norm(Y - PA @ coeff, axis=0)
    return pad_flat(basisB.Q, basisB.trunc, extB) @ (Uc @ coeff), leak


def intertwining_columns(U, pA, pB, basisA, basisB):
    """Per safe A-vector residual ``||U T_A v - T_B U v||``."""
    Uc = _coords(U, basisA, basisB)
    s = basisA.safe
    TA, extA = _image_columns(pA, basisA, basisA.Q[:, s])
    extB = basisB.trunc.raised(1)
    left, leak = _transport(Uc, basisA, basisB, TA, extA, extB)
    right, _ = _image_columns(pB, basisB, basisB.Q @ Uc[:, s])
    r = np.linalg.norm(left - right, axis=0)
    return np.sqrt(r**2 + leak**2)


def verify_intertwining(U, pA, pB, basisA, basisB):
    cols = intertwining_columns(U, pA, pB, basisA, basisB)
    return float(cols.max()) if cols.size else 0.0


@dataclass
class StructureReport:
    off_block: float
    z1_commutation: float
    lam: complex
    lam_residual: float
    beta: complex | None
    beta_residual: float | None
    beta_norm_relation: float | None
    j_compatibility: float
    tol: float
    checks: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(self.checks.values())

    @property
    def failures(self):
        return [k for k, v in self.checks.items() if not v]


def _first_row_lift(X, trunc, ext):
    """``J`` applied to the disk part of flat columns ``X`` (result in ``ext``)."""
    out = np.zeros((ext.dim, X.shape[1]), dtype=complex)
    f = X[trunc.n_F : trunc.n_F + trunc.n_f]
    n = min(trunc.n_f, ext.deg_z2 + 1)
    out[:n] = f[:n]
    lost = np.linalg.norm(f[n:], axis=0) if trunc.n_f > n else np.zeros(X.shape[1])
    return out, lost


def verify_structure(U, basisA, basisB, tol=1e-8):
    """Block structure of ``U`` as a direct-sum map.

    Checks (a) no mass between first-coordinate and lower tags, (b)
    ``U z1 = z1 U`` on safe first-coordinate vectors, (c) one unimodular
    ``lambda`` on the M1-phi-block, (d) a scalar ``beta`` on the M1-line with
    ``|beta|^2 (1 + ||g_B||^2) = 1 + ||g_A||^2``, and (e) ``U J = J U`` on
    the M1-phi-block.
    """
    Uc = _coords(U, basisA, basisB)
    fA, lA = basisA.indices(FIRST_TAGS), basisA.indices(LOWER_TAGS)
    fB, lB = basisB.indices(FIRST_TAGS), basisB.indices(LOWER_TAGS)
    off = max(
        np.linalg.norm(Uc[np.ix_(fB, lA)]) if fB.size and lA.size else 0.0,
        np.linalg.norm(Uc[np.ix_(lB, fA)]) if lB.size and fA.size else 0.0,
    )
    extA, extB = basisA.trunc.raised(1), basisB.trunc.raised(1)

    sel = fA[basisA.safe[fA]]
    z1_res = 0.0
    if sel.size:
        Z = _mul_z1_flat(basisA.Q[:, sel], basisA.trunc, extA)
        left, leak = _transport(Uc, basisA, basisB, Z, extA, extB)
        right = _mul_z1_flat(basisB.Q @ Uc[:, sel], basisB.trunc, extB)
        z1_res = float(np.max(np.sqrt(np.linalg.norm(left - right, axis=0) ** 2 + leak**2)))

    idxB = basisB.label_index()
    mA = basisA.indices(M1_PHI)
    lam, lam_res = 1.0 + 0j, 0.0
    if mA.size:
        mB = np.array([idxB.get(basisA.labels[j], -1) for j in mA])
        if np.any(mB < 0):
            lam_res = math.inf
        else:
            img = basisB.Q @ Uc[:, mA]
            tgt = basisB.Q[:, mB]
            lam = complex(np.vdot(tgt.ravel(), img.ravel()) / np.vdot(tgt.ravel(), tgt.ravel()))
            lam_res = float(np.max(np.linalg.norm(img - lam * tgt, axis=0)))

    beta = beta_res = rel = None
    line = basisA.indices(M1_LINE)
    if line.size:
        jB = idxB.get((M1_LINE,))
        if jB is None:
            beta_res, rel = math.inf, math.inf
        else:
            img = basisB.Q @ Uc[:, line[0]]
            tgt = basisB.Q[:, jB]
            bc = complex(np.vdot(tgt, img))
            beta_res = float(np.linalg.norm(img - bc * tgt))
            beta = bc * _line_norm(basisA) / _line_norm(basisB)
            gA, gB = basisA.meta["g_norm"], basisB.meta["g_norm"]
            rel = abs(abs(beta) ** 2 * (1 + gB**2) - (1 + gA**2))

    j_res = 0.0
    if mA.size:
        G = basisA.Q[:, mA]
        JG, lostA = _first_row_lift(G, basisA.trunc, extA)
        left, leak = _transport(Uc, basisA, basisB, JG, extA, extB)
        JU, lostB = _first_row_lift(basisB.Q @ Uc[:, mA], basisB.trunc, extB)
        j_res = float(np.max(np.sqrt(np.linalg.norm(left - JU, axis=0) ** 2 + leak**2 + lostA**2 + lostB**2)))

    checks = {
        "block_diagonal": bool(off < tol),
        "z1_commutes": z1_res < tol,
        "lambda_unimodular": lam_res < tol and abs(abs(lam) - 1) < tol,
        "beta_line": line.size == 0 or (beta_res < tol and rel < tol and abs(beta) > 0),
        "J_compatible": j_res < tol,
    }
    return StructureReport(
        off_block=float(off),
        z1_commutation=z1_res,
        lam=lam,
        lam_residual=lam_res,
        beta=beta,
        beta_residual=beta_res,
        beta_norm_relation=rel,
        j_compatibility=j_res,
        tol=tol,
        checks=checks,
    )


# ---------------------------------------------------------------------------
# bounded negative search


@dataclass
class SearchResult:
    residual: float
    unitarity_defect: float
    restarts: int
    objective: float
    block_sizes: tuple
    per_restart: list = field(default_factory=list)


def _polar(X):
    u, _, vh = np.linalg.svd(X)
    return u @ vh


def intertwiner_search(pA, basisA, pB, basisB, restarts=4, seed=0, max_iter=400, penalty=10.0):
    """Least-squares search for a block-diagonal unitary intertwiner.

    Minimizes ``||H X C_A - G X S||^2 + penalty ||X^H X - I||^2`` over
    coordinate matrices ``X`` that keep first-coordinate tags apart from
    lower tags.  ``C_A`` holds the coordinates of ``T_A`` on safe A-vectors,
    ``G = T_B Q_B`` and ``H`` embeds ``Q_B``; ``S`` selects safe columns.
    Each restart (the label map if available, then random unitaries) is
    polished by L-BFGS, projected to the nearest block unitary, and scored by
    the largest per-vector intertwining residual.  A lower bound on what any
    block-diagonal unitary can achieve is therefore *not* claimed; the
    result certifies only that this search did not find one.
    """
    fA, lA = basisA.indices(FIRST_TAGS), basisA.indices(LOWER_TAGS)
    fB, lB = basisB.indices(FIRST_TAGS), basisB.indices(LOWER_TAGS)
    sizes = ((len(fB), len(fA)), (len(lB), len(lA)))
    if len(fA) != len(fB) or len(lA) != len(lB):
        return SearchResult(math.inf, 1.0, 0, math.inf, sizes)
    nA, nB = basisA.dim, basisB.dim
    s = np.flatnonzero(basisA.safe)
    TA, extA = _image_columns(pA, basisA, basisA.Q[:, s])
    PA = pad_flat(basisA.Q, basisA.trunc, extA)
    C = PA.conj().T @ TA
    leak = np.linalg.norm(TA - PA @ C, axis=0)
    extB = basisB.trunc.raised(1)
    H = pad_flat(basisB.Q, basisB.trunc, extB)
    G = t_matrix(pB, basisB.trunc, extB).entries @ basisB.Q
    mask = np.zeros((nB, nA), dtype=bool)
    mask[np.ix_(fB, fA)] = True
    mask[np.ix_(lB, lA)] = True

    def unpack(x):
        X = np.zeros((nB, nA), dtype=complex)
        half = x.size // 2
        X[mask] = x[:half] + 1j * x[half:]
        return X

    def fun(x):
        X = unpack(x)
        R = H @ (X @ C) - G @ X[:, s]
        E = X.conj().T @ X - np.eye(nA)
        val = np.vdot(R, R).real + penalty * np.vdot(E, E).real
        grad = H.conj().T @ R @ C.conj().T
        grad[:, s] -= G.conj().T @ R
        grad = 2 * grad + 4 * penalty * (X @ E)
        g = grad[mask]
        return val, np.concatenate([g.real, g.imag])

    def project(X):
        Y = np.zeros_like(X)
        for rows, cols in ((fB, fA), (lB, lA)):
            if rows.size:
                Y[np.ix_(rows, cols)] = _polar(X[np.ix_(rows, cols)])
        return Y

    rng = np.random.default_rng(seed)
    starts = []
    try:
        starts.append(label_map(basisA, basisB))
    except StructuralError:
        pass
    while len(starts) < restarts:
        Z = rng.standard_normal((nB, nA)) + 1j * rng.standard_normal((nB, nA))
        starts.append(project(Z * mask))

    best = (math.inf, math.inf)
    runs = []
    for X0 in starts:
        x0 = np.concatenate([X0[mask].real, X0[mask].imag])
        res = minimize(fun, x0, jac=True, method="L-BFGS-B", options={"maxiter": max_iter})
        X = project(unpack(res.x))
        R = H @ (X @ C) - G @ X[:, s]
        col = float(np.max(np.sqrt(np.linalg.norm(R, axis=0) ** 2 + leak**2)))
        runs.append(col)
        if col < best[0]:
            best = (col, float(res.fun))
    return SearchResult(best[0], 0.0, len(starts), best[1], sizes, runs)
