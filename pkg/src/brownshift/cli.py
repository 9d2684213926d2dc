"""Command-line experiment runner.

``brownshift --config run.json [--out report.json] [--format json|csv] [--seed N] [--tol X]``

Exit status: 0 when every assertion in the report passes, 1 when one fails
(the report names it), 2 for configuration, validation, truncation or
conditioning errors.
"""
from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import math
import sys
from importlib import resources

import jsonschema
import numpy as np

from .asymptotics import (
    c00_adjoint_decay,
    c00_forward_decay,
    case_vectors,
    krylov_noncyclicity,
)
from .equivalence import (
    build_intertwiner,
    decide_equivalence,
    extract_invariants,
    intertwiner_search,
    unitarity_defect,
    verify_intertwining,
    verify_structure,
)
from .errors import BrownshiftError
from .hardy import HardyVec1, StateVec, Truncation, pad_flat
from .inner import BlaschkeProduct, angular_derivative, check_g, g_function
from .operators import BrownianParams, apply_T, orbit_e3_closed_form, restricted_norm, t_matrix
from .subspaces import (
    G_BLOCK,
    PSI,
    TYPE_II,
    InnerMultiplier,
    LiftedSubspaceSpec,
    build_lifted,
    build_matched,
    invariance_residual,
    wandering_dimension,
)

SCHEMA_VERSION = "1"
COMMANDS = ("orbit", "norm", "gfn", "subspace", "equiv", "c00", "noncyclic")

ORBIT_TOL = 1e-12
NORM_TOL = 1e-6
INVARIANCE_TOL = 1e-10
INTERTWINING_TOL = 1e-8
SEARCH_FLOOR = 1e-2


class ConfigError(BrownshiftError):
    """The config file is unreadable or fails the schema."""


def load_schema():
    text = resources.files("brownshift").joinpath("schemas/config.schema.json").read_text()
    return json.loads(text)


# ---------------------------------------------------------------------------
# config parsing


def _complex(v):
    if isinstance(v, dict):
        return complex(v["re"], v.get("im", 0.0))
    return complex(v)


def _blaschke(d):
    d = d or {}
    return BlaschkeProduct(tuple(_complex(a) for a in d.get("zeros", ())), _complex(d.get("phase", 1.0)))


def parse_spec(d, default_params):
    sigma = d.get("sigma", default_params.sigma if default_params else None)
    theta = d.get("theta", default_params.theta if default_params else 0.0)
    if sigma is None:
        raise ConfigError("spec has no sigma and config has no params")
    psi = d.get("psi", {})
    cols = tuple(HardyVec1(np.array([_complex(c) for c in col])) for col in psi.get("V", ()))
    return LiftedSubspaceSpec(
        kind=d["kind"],
        phi=_blaschke(d["phi"]),
        psi=InnerMultiplier(_blaschke(psi.get("b")), cols),
        params=BrownianParams(sigma, theta),
    )


def validate_config(cfg):
    try:
        jsonschema.validate(cfg, load_schema())
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {path}: {exc.message}") from None


def config_hash(cfg):
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


# ---------------------------------------------------------------------------
# report helpers


def to_jsonable(v):
    if isinstance(v, dict):
        return {str(k): to_jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [to_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [to_jsonable(x) for x in v.tolist()]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (complex, np.complexfloating)):
        return {"re": to_jsonable(float(v.real)), "im": to_jsonable(float(v.imag))}
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    return v


class Report:
    def __init__(self):
        self.results = {}
        self.assertions = []
        self.rows = []
        self.row_header = None

    def check(self, name, passed, value=None, threshold=None):
        self.assertions.append(
            {"name": name, "passed": bool(passed), "value": value, "threshold": threshold}
        )

    @property
    def passed(self):
        return all(a["passed"] for a in self.assertions)


# ---------------------------------------------------------------------------
# commands


def _params(cfg):
    p = cfg.get("params")
    return BrownianParams(p["sigma"], p.get("theta", 0.0)) if p else None


def _require_params(cfg):
    p = _params(cfg)
    if p is None:
        raise ConfigError(f"command {cfg['command']!r} needs params.sigma")
    return p


def _specs(cfg, n=None):
    specs = [parse_spec(d, _params(cfg)) for d in cfg.get("specs", [])]
    if not specs:
        raise ConfigError(f"command {cfg['command']!r} needs at least one spec")
    if n is not None and len(specs) != n:
        raise ConfigError(f"command {cfg['command']!r} needs exactly {n} specs, got {len(specs)}")
    return specs


def cmd_orbit(cfg, trunc, opts, rep):
    p = _require_params(cfg)
    n_max = opts.get("n_max", 20)
    x = StateVec.e3(trunc)
    worst = 0.0
    rep.row_header = ["n", "norm_sq_direct", "norm_sq_closed_form", "max_coeff_diff"]
    for n in range(n_max + 1):
        if n:
            x = apply_T(p, x, trunc.tol)
        y = orbit_e3_closed_form(p, n, trunc)
        diff = float(np.max(np.abs(x.to_array() - y.to_array())))
        worst = max(worst, diff)
        rep.rows.append([n, x.norm() ** 2, y.norm() ** 2, diff])
    rep.results["max_coeff_diff"] = worst
    rep.check("orbit_closed_form", worst <= ORBIT_TOL, worst, ORBIT_TOL)


def cmd_norm(cfg, trunc, opts, rep):
    out = []
    for i, spec in enumerate(_specs(cfg)):
        basis = build_lifted(spec, trunc)
        val = restricted_norm(spec.params, basis, seed=opts.get("seed"))
        expect = spec.params.norm
        out.append({"index": i, "kind": spec.kind, "sigma": spec.params.sigma, "norm": val, "expected": expect})
        rep.check(f"norm[{i}]", abs(val - expect) <= NORM_TOL, abs(val - expect), NORM_TOL)
    rep.results["norms"] = out


def cmd_gfn(cfg, trunc, opts, rep):
    out = []
    for i, spec in enumerate(_specs(cfg)):
        p = spec.params
        g = g_function(spec.phi, p.sigma, p.theta, trunc.deg_z, trunc.tol)
        chk = check_g(g, spec.phi, trunc)
        out.append(
            {
                "index": i,
                "coeffs": g.series.coeffs,
                "norm": g.norm,
                "norm_sq_formula": p.sigma**2 * angular_derivative(spec.phi, p.theta),
                "boundary_value": g.boundary_value,
                "tail": g.tail,
                "max_inner_phi_block": chk.max_inner,
                "model_space_residual": chk.projection_residual,
                "truncation_loss": chk.truncation_loss,
            }
        )
        rep.check(f"g_check[{i}]", chk.passed, max(chk.max_inner, chk.projection_residual), trunc.tol)
    rep.results["g"] = out


def _random_safe_residual(p, basis, count, seed):
    """Invariance residual of random unit combinations of the safe vectors."""
    if count == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    Qs = basis.Q[:, basis.safe]
    C = rng.standard_normal((Qs.shape[1], count)) + 1j * rng.standard_normal((Qs.shape[1], count))
    X = Qs @ (C / np.linalg.norm(C, axis=0))
    ext = basis.trunc.raised(1)
    Y = t_matrix(p, basis.trunc, ext).entries @ X
    P = pad_flat(basis.Q, basis.trunc, ext)
    return float(np.max(np.linalg.norm(Y - P @ (P.conj().T @ Y), axis=0)))


def cmd_subspace(cfg, trunc, opts, rep):
    out = []
    for i, spec in enumerate(_specs(cfg)):
        basis = build_lifted(spec, trunc)
        res = invariance_residual(spec.params, basis)
        rnd = _random_safe_residual(spec.params, basis, opts.get("random_tests", 8), opts.get("seed", 0))
        w_psi = wandering_dimension(basis, PSI)
        entry = {
            "index": i,
            "kind": spec.kind,
            "dim": basis.dim,
            "safe": int(basis.safe.sum()),
            "counts": {t: int(basis.tags.count(t)) for t in sorted(set(basis.tags))},
            "invariance_residual": res,
            "random_safe_residual": rnd,
            "wandering_psi": w_psi,
            "meta": basis.meta,
        }
        rep.check(f"invariance[{i}]", max(res, rnd) < INVARIANCE_TOL, max(res, rnd), INVARIANCE_TOL)
        rep.check(f"wandering_psi[{i}]", w_psi == spec.psi.rank, w_psi, spec.psi.rank)
        if spec.kind == TYPE_II and G_BLOCK in basis.tags:
            w_g = wandering_dimension(basis, G_BLOCK)
            entry["wandering_g"] = w_g
            rep.check(f"wandering_g[{i}]", w_g == 1, w_g, 1)
        out.append(entry)
    rep.results["subspaces"] = out


def cmd_equiv(cfg, trunc, opts, rep):
    A, B = _specs(cfg, 2)
    if opts.get("match_ranges", True):
        bA, bB = build_matched(A, B, trunc)
    else:
        bA, bB = build_lifted(A, trunc), build_lifted(B, trunc)
    iA, iB = extract_invariants(A, bA), extract_invariants(B, bB)
    verdict = decide_equivalence(iA, iB)
    rep.results["invariants"] = [iA.as_dict(), iB.as_dict()]
    rep.results["verdict"] = {
        "equivalent": verdict.equivalent,
        "obstructions": list(verdict.obstructions),
        "gaps": verdict.details,
    }
    expect = opts.get("expect")
    if expect is not None:
        rep.check("verdict", verdict.equivalent == (expect == "equivalent"), verdict.equivalent, expect)
    else:
        rep.check("verdict_reported", True, verdict.equivalent)
    if verdict.equivalent and opts.get("intertwiner", True):
        bundle = build_intertwiner(A, bA, B, bB)
        res = verify_intertwining(bundle, A.params, B.params, bA, bB)
        st = verify_structure(bundle, bA, bB)
        defect = unitarity_defect(bundle)
        rep.results["intertwiner"] = {
            "dim": bA.dim,
            "lambda": bundle.lam,
            "beta": bundle.beta,
            "unitarity_defect": defect,
            "intertwining_residual": res,
            "structure": {
                "off_block": st.off_block,
                "z1_commutation": st.z1_commutation,
                "lambda_residual": st.lam_residual,
                "beta_residual": st.beta_residual,
                "beta_norm_relation": st.beta_norm_relation,
                "J_compatibility": st.j_compatibility,
                "checks": st.checks,
            },
        }
        rep.check("unitarity", defect < INVARIANCE_TOL, defect, INVARIANCE_TOL)
        rep.check("intertwining", res < INTERTWINING_TOL, res, INTERTWINING_TOL)
        for name, ok in st.checks.items():
            rep.check(f"structure.{name}", ok)
    if not verdict.equivalent and opts.get("search", False):
        sr = intertwiner_search(
            A.params, bA, B.params, bB, restarts=opts.get("restarts", 4), seed=opts.get("seed", 0)
        )
        rep.results["search"] = {
            "best_residual": sr.residual,
            "per_restart": sr.per_restart,
            "block_sizes": sr.block_sizes,
        }
        rep.check("search_fails", sr.residual >= SEARCH_FLOOR, sr.residual, SEARCH_FLOOR)


def cmd_c00(cfg, trunc, opts, rep):
    p = _require_params(cfg)
    n_max = opts.get("n_max", 60)
    deg = opts.get("max_degree", 4)
    rep.row_header = ["n", "norm", "envelope", "label"]
    curves = []
    for name, x in case_vectors(deg, trunc):
        c = c00_adjoint_decay(p, x, n_max)
        curves.append((name, c))
    fwd = c00_forward_decay(p, StateVec.e3(trunc), n_max, strict=False)
    curves.append(("e3", fwd))
    summary = []
    for name, c in curves:
        ok = c.within_envelope()
        rep.check(f"envelope[{c.label}:{name}]", ok)
        summary.append(
            {
                "vector": name,
                "label": c.label,
                "final_norm": float(c.norms[-1]),
                "n_final": int(c.n_values[-1]),
                "C_x": c.meta.get("C_x"),
                "cap": c.meta.get("cap"),
            }
        )
        rep.rows.extend([[n, a, b, f"{lab}:{name}"] for n, a, b, lab in c.rows()])
    rep.results["curves"] = summary
    rep.results["forward_capped"] = fwd.meta["capped"]


def cmd_noncyclic(cfg, trunc, opts, rep):
    p = _require_params(cfg)
    n_max = opts.get("n_max", 20)
    r = krylov_noncyclicity(p, n_max, trunc)
    rep.results["krylov"] = {
        "max_symmetry_residual": r.max_symmetry_residual,
        "max_witness_inner": r.max_witness_inner,
        "witness_distance": r.witness_distance,
        "krylov_rank": r.krylov_rank,
        "b_ranks": [{"n": n, "rank": k} for n, k in r.b_ranks],
    }
    for name, ok in r.checks().items():
        rep.check(name, ok)


DISPATCH = {
    "orbit": cmd_orbit,
    "norm": cmd_norm,
    "gfn": cmd_gfn,
    "subspace": cmd_subspace,
    "equiv": cmd_equiv,
    "c00": cmd_c00,
    "noncyclic": cmd_noncyclic,
}


# ---------------------------------------------------------------------------
# driver


def _truncation(cfg):
    t = cfg.get("truncation")
    if t is None:
        return Truncation.cube(20)
    return Truncation(t["deg_z1"], t["deg_z2"], t["deg_z"], t.get("tol", 1e-10))


def run(cfg):
    """Validate and execute ``cfg``; returns ``(exit_code, report_dict, report)``."""
    validate_config(cfg)
    trunc = _truncation(cfg)
    opts = cfg.get("options", {})
    rep = Report()
    header = {
        "schema_version": SCHEMA_VERSION,
        "command": cfg["command"],
        "config_sha256": config_hash(cfg),
        "truncation": {"deg_z1": trunc.deg_z1, "deg_z2": trunc.deg_z2, "deg_z": trunc.deg_z, "tol": trunc.tol},
    }
    try:
        DISPATCH[cfg["command"]](cfg, trunc, opts, rep)
    except BrownshiftError as exc:
        cause = f"{type(exc).__module__.rsplit('.', 1)[-1]}.{type(exc).__name__}: {exc}"
        return 2, dict(header, status="error", error=cause), rep
    failed = [a["name"] for a in rep.assertions if not a["passed"]]
    out = dict(
        header,
        status="pass" if not failed else "fail",
        failed=failed,
        assertions=rep.assertions,
        results=rep.results,
    )
    return (0 if not failed else 1), out, rep


def render_json(report):
    return json.dumps(to_jsonable(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def render_csv(report, rep):
    buf = io.StringIO()
    buf.write(f"# schema_version={SCHEMA_VERSION}\n")
    buf.write(f"# command={report['command']} config_sha256={report['config_sha256']}\n")
    t = report["truncation"]
    buf.write(f"# truncation={t['deg_z1']},{t['deg_z2']},{t['deg_z']} tol={t['tol']!r}\n")
    buf.write(f"# status={report['status']}\n")
    w = csv.writer(buf, lineterminator="\n")
    if rep is not None and rep.row_header:
        w.writerow(rep.row_header)
        for row in rep.rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    else:
        w.writerow(["name", "passed", "value", "threshold"])
        for a in report.get("assertions", []):
            w.writerow([a["name"], a["passed"], to_jsonable(a["value"]), to_jsonable(a["threshold"])])
        if "error" in report:
            w.writerow(["error", False, report["error"], ""])
    return buf.getvalue()


def build_parser():
    ap = argparse.ArgumentParser(prog="brownshift", description=__doc__.split("\n")[0])
    ap.add_argument("--config", required=True, help="JSON experiment config")
    ap.add_argument("--out", help="report path (default: output.path or stdout)")
    ap.add_argument("--format", choices=("json", "csv"), help="report format (default: output.format or json)")
    ap.add_argument("--seed", type=int, help="seed for random safe-vector tests and searches")
    ap.add_argument("--tol", type=float, help="override truncation.tol")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cli.ConfigError: cannot read config: {exc}", file=sys.stderr)
        return 2
    cfg = copy.deepcopy(cfg)
    if isinstance(cfg, dict):
        if args.seed is not None:
            cfg.setdefault("options", {})["seed"] = args.seed
        if args.tol is not None and isinstance(cfg.get("truncation"), dict):
            cfg["truncation"]["tol"] = args.tol
        elif args.tol is not None:
            cfg["truncation"] = {"deg_z1": 20, "deg_z2": 20, "deg_z": 20, "tol": args.tol}
    try:
        code, report, rep = run(cfg)
    except BrownshiftError as exc:
        print(f"{type(exc).__module__.rsplit('.', 1)[-1]}.{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    out_cfg = cfg.get("output", {})
    fmt = args.format or out_cfg.get("format", "json")
    path = args.out or out_cfg.get("path")
    text = render_json(report) if fmt == "json" else render_csv(report, rep)
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if code == 2:
        print(report["error"], file=sys.stderr)
    elif code == 1:
        print("failed assertions: " + ", ".join(report["failed"]), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
