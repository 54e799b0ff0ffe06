"""Batch experiment runner: JSON config in, JSON/CSV reports out.

    equivar-lab <task> --config cfg.json [--out DIR] [--seed N] [--tol X]

Tasks: flow, energy, hodge, deform1, deform2, variation, psh, critical-scan,
refine-study.  Exit codes: 0 success, 2 validation failure, 3 harmonic-map
solver non-convergence where a converged metric is required, 4 obstructed
second-order deformation request.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import energyvar as ev
from . import harmonicflow as hf
from . import meshcover as mc
from . import repvar as rv
from .deform import (ObstructedDeformationError, first_order,
                     obstruction_check, second_order)
from .liealg import MatrixGroup
from .twistedhodge import TwistedCochain, TwistedComplex

SCHEMA_VERSION = 1
TASKS = ("flow", "energy", "hodge", "deform1", "deform2", "variation",
         "psh", "critical-scan", "refine-study")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NONCONVERGED = 3
EXIT_OBSTRUCTED = 4


class ConfigError(ValueError):
    pass


def _as_complex(x):
    if isinstance(x, (list, tuple)) and len(x) == 2:
        return complex(x[0], x[1])
    return complex(x)


def _as_matrix(data):
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 3:
        return arr[..., 0] + 1j * arr[..., 1]
    return arr.astype(complex)


def build_mesh(spec):
    kind = spec.get("kind")
    if kind == "circle":
        return mc.build_circle(int(spec.get("n", 8)))
    if kind == "torus":
        return mc.build_torus(int(spec.get("n", 6)), int(spec.get("m", spec.get("n", 6))))
    if kind == "genus2":
        return mc.build_genus2(int(spec.get("k", 1)))
    if kind == "json":
        path = Path(spec["path"])
        return mc.CoverMesh.from_json(path.read_text())
    raise ConfigError(f"unknown mesh kind {kind!r}")


def build_group(spec):
    return MatrixGroup(kind=spec.get("kind", "sl"), n=int(spec.get("n", 2)),
                       field=spec.get("field", "R"))


FAMILIES = ("circle_hyperbolic", "circle_parabolic", "circle_elliptic",
            "torus_diag", "torus_gl1c", "torus_unitary", "trivial",
            "genus2_fuchsian")


def build_representation(spec, group, mesh):
    if "inline" in spec:
        data = spec["inline"]
        images = {k: _as_matrix(v) for k, v in data["images"].items()}
        return rv.Representation.for_mesh(group, mesh, images)
    family = spec.get("family")
    params = spec.get("params", {})
    if family == "circle_hyperbolic":
        return rv.hyperbolic_circle_rep(group, mesh, float(params.get("lam", 2.0)))
    if family == "circle_parabolic":
        return rv.parabolic_circle_rep(group, mesh)
    if family == "circle_elliptic":
        return rv.elliptic_circle_rep(group, mesh, float(params.get("theta", 0.7)))
    if family == "torus_diag":
        return rv.torus_diag_rep(group, mesh, _as_complex(params.get("alpha", [0.4, 0.3])),
                                 _as_complex(params.get("beta", [-0.2, 0.5])))
    if family == "torus_gl1c":
        return rv.torus_gl1c_rep(group, mesh, _as_complex(params.get("z1", [0.5, 1.0])),
                                 _as_complex(params.get("z2", [-0.3, 0.2])))
    if family == "torus_unitary":
        return rv.torus_unitary_rep(group, mesh, float(params.get("theta1", 0.6)),
                                    float(params.get("theta2", -0.35)))
    if family == "trivial":
        return rv.trivial_rep(group, mesh)
    if family == "genus2_fuchsian":
        return rv.genus2_fuchsian_rep(group, mesh)
    raise ConfigError(f"unknown representation family {family!r} "
                      f"(available: {', '.join(FAMILIES)})")


def build_path(spec, rep):
    kind = spec.get("kind")
    if kind == "commuting_exp":
        B = {k: _as_matrix(v) for k, v in spec["B"].items()}
        C = {k: _as_matrix(v) for k, v in spec.get("C", {}).items()} or None
        return rv.commuting_exp_path(rep, B, C)
    if kind == "conjugation":
        return rv.conjugation_path(rep, _as_matrix(spec["xi"]))
    if kind == "bending":
        return rv.bending_path(rep, float(spec.get("scale", 0.5)),
                               bool(spec.get("imaginary", True)))
    raise ConfigError(f"unknown path kind {kind!r}")


def build_cocycle(spec, rep):
    if "values" in spec:
        vals = {k: _as_matrix(v) for k, v in spec["values"].items()}
        c = rv.Cocycle(rep, vals)
    elif "path_family" in spec:
        c, _ = build_path(spec["path_family"], rep).jets()
    else:
        raise ConfigError("deformation spec needs 'values' or 'path_family'")
    if not c.validate():
        raise ConfigError("cocycle does not satisfy the relator conditions")
    return c


def build_jet(spec, rep):
    if "path_family" in spec:
        path = build_path(spec["path_family"], rep)
        c, k = path.jets()
        return c, k, path
    c = build_cocycle(spec, rep)
    kvals = {name: _as_matrix(v) for name, v in spec.get("second", {}).items()} \
        if "second" in spec else {name: np.zeros_like(c.values[name])
                                  for name in rep.generators}
    jet = rv.Jet2Cocycle(c, kvals)
    if not jet.validate():
        raise ConfigError("second-order values fail the jet cocycle law")
    return c, kvals, None


def converged_context(cfg, mesh, rep):
    tol = cfg["tolerances"]["flow_tol"]
    f0 = hf.constant_map(mesh, rep)
    f, rpt = hf.flow(rep, f0, tol=tol,
                     max_iter=int(cfg.get("flow", {}).get("max_iter", 60000)))
    if not rpt.converged:
        raise FlowNotConverged(rpt)
    return TwistedComplex(mesh, rep, f), f, rpt


class FlowNotConverged(RuntimeError):
    def __init__(self, report):
        super().__init__(f"flow did not converge: tension {report.tension:.3e}")
        self.report = report


def resolve_config(args):
    try:
        cfg = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    cfg.setdefault("schema_version", SCHEMA_VERSION)
    cfg.setdefault("seed", 0)
    if args.seed is not None:
        cfg["seed"] = args.seed
    tols = cfg.setdefault("tolerances", {})
    tols.setdefault("flow_tol", 1e-8)
    tols.setdefault("rel_obstruction", 1e-7)
    tols.setdefault("validation", 1e-8)
    if args.tol is not None:
        tols["flow_tol"] = args.tol
    return cfg


def write_report(out_dir, task, payload):
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{task.replace('-', '_')}_report.json"
    path.write_text(json.dumps(payload, sort_keys=True, indent=1,
                               default=_json_default) + "\n")
    return path


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, complex):
        return [x.real, x.imag]
    raise TypeError(f"not JSON serializable: {type(x)}")


def write_csv(out_dir, name, header, rows):
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


# ----------------------------------------------------------------------
# task implementations

def task_flow(cfg, out_dir):
    mesh = build_mesh(cfg["mesh"])
    group = build_group(cfg["group"])
    rep = build_representation(cfg["representation"], group, mesh)
    if not rep.validate(cfg["tolerances"]["validation"]):
        raise ConfigError("representation fails the relator check")
    fspec = cfg.get("flow", {})
    rng = np.random.default_rng(cfg["seed"])
    if fspec.get("start", "constant") == "random":
        f0 = hf.random_map(mesh, rep, rng, float(fspec.get("scale", 0.4)))
    else:
        f0 = hf.constant_map(mesh, rep)
    f, rpt = hf.flow(rep, f0, tol=cfg["tolerances"]["flow_tol"],
                     max_iter=int(fspec.get("max_iter", 20000)),
                     drift_radius=float(fspec.get("drift_radius", 50.0)))
    return {"flow": rpt.to_dict()}


def task_energy(cfg, out_dir):
    mesh = build_mesh(cfg["mesh"])
    group = build_group(cfg["group"])
    rep = build_representation(cfg["representation"], group, mesh)
    if not rep.validate(cfg["tolerances"]["validation"]):
        raise ConfigError("representation fails the relator check")
    fspec = cfg.get("flow", {})
    E, reductive, rpt = hf.energy_of_rep(
        rep, mesh, tol=cfg["tolerances"]["flow_tol"],
        max_iter=int(fspec.get("max_iter", 20000)),
        n_starts=int(fspec.get("n_starts", 2)), seed=cfg["seed"],
        drift_radius=float(fspec.get("drift_radius", 50.0)))
    return {"energy": E, "reductive_suspected": reductive,
            "last_flow": rpt.to_dict()}


def task_hodge(cfg, out_dir):
    mesh = build_mesh(cfg["mesh"])
    group = build_group(cfg["group"])
    rep = build_representation(cfg["representation"], group, mesh)
    if not rep.validate(cfg["tolerances"]["validation"]):
        raise ConfigError("representation fails the relator check")
    ctx, f, rpt = converged_context(cfg, mesh, rep)
    rng = np.random.default_rng(cfg["seed"])
    F = TwistedCochain(0, np.stack([group.random_alg(rng) for _ in range(mesh.nv)]))
    alpha = TwistedCochain(1, np.stack([group.random_alg(rng) for _ in range(mesh.ne)]))
    dd = ctx.norm(ctx.d(ctx.d(F)), 2) if mesh.nf else 0.0
    adj = abs(ctx.inner(ctx.d(F), alpha, 1) - ctx.inner(F, ctx.codiff(alpha), 0))
    ex, coex, harm = ctx.hodge_decompose(alpha)
    recon = ctx.norm(TwistedCochain(1, ex.values + coex.values + harm.values
                                    - alpha.values), 1)
    spec = np.linalg.eigvalsh(ctx.jacobi_dense_sym())
    write_csv(out_dir, "jacobi_spectrum.csv", ["index", "eigenvalue"],
              list(enumerate(spec.tolist())))
    return {
        "flow": rpt.to_dict(),
        "d_squared": dd,
        "adjunction": adj,
        "hodge_reconstruction": recon,
        "kernel_dim": ctx.kernel_dim,
        "jacobi_min_eigenvalue": float(spec.min()),
        "dstar_beta": ctx.norm(ctx.codiff(ctx.beta()), 0),
    }


def task_deform1(cfg, out_dir):
    mesh = build_mesh(cfg["mesh"])
    group = build_group(cfg["group"])
    rep = build_representation(cfg["representation"], group, mesh)
    c = build_cocycle(cfg["deformation"], rep)
    ctx, _, rpt = converged_context(cfg, mesh, rep)
    fo = first_order(ctx, c)
    obs = obstruction_check(ctx, fo.omega, cfg["tolerances"]["rel_obstruction"])
    return {"flow": rpt.to_dict(), "residuals": fo.residuals,
            "kernel_dim": ctx.kernel_dim, "obstruction": obs.to_dict()}


def task_deform2(cfg, out_dir):
    mesh = build_mesh(cfg["mesh"])
    group = build_group(cfg["group"])
    rep = build_representation(cfg["representation"], group, mesh)
    c, k, _ = build_jet(cfg["deformation"], rep)
    ctx, _, rpt = converged_context(cfg, mesh, rep)
    so, sol = second_order(ctx, c, k,
                           rel_tol=cfg["tolerances"]["rel_obstruction"])
    return {"flow": rpt.to_dict(), "residuals": so.residuals,
            "obstruction": sol.obstruction.to_dict(),
            "kernel_dim": ctx.kernel_dim}


def task_variation(cfg, out_dir):
    mesh = build_mesh(cfg["mesh"])
    group = build_group(cfg["group"])
    rep = build_representation(cfg["representation"], group, mesh)
    path = build_path(cfg["deformation"]["path_family"], rep)
    ctx, _, rpt = converged_context(cfg, mesh, rep)
    with_second = bool(cfg.get("with_second", True))
    out = ev.variation_report(ctx, path, mesh, with_second=with_second,
                              rel_tol=cfg["tolerances"]["rel_obstruction"])
    rows = [[r["h"], r["first"], r["second"]] for r in out["fd_table"]]
    write_csv(out_dir, "variation_fd.csv", ["h", "fd_first", "fd_second"], rows)
    out["flow"] = rpt.to_dict()
    return out


def task_psh(cfg, out_dir):
    mesh = build_mesh(cfg["mesh"])
    group = build_group(cfg["group"])
    if not group.is_complex:
        raise ConfigError("psh task needs a complex group")
    rep = build_representation(cfg["representation"], group, mesh)
    c, k, _ = build_jet(cfg["deformation"], rep)
    ctx, _, rpt = converged_context(cfg, mesh, rep)
    report = ev.psh_defect(ctx, c, k, cfg["tolerances"]["rel_obstruction"])
    return {"flow": rpt.to_dict(), "psh": report.to_dict(),
            "residuals": report.residuals}


def task_critical_scan(cfg, out_dir):
    mesh = build_mesh(cfg["mesh"])
    group = build_group(cfg["group"])
    rep = build_representation(cfg["representation"], group, mesh)
    ctx, _, rpt = converged_context(cfg, mesh, rep)
    scan = ev.critical_scan(ctx)
    write_csv(out_dir, "critical_scan.csv", ["direction", "normalized_first_variation"],
              list(enumerate(scan.per_direction)))
    return {"flow": rpt.to_dict(), "scan": scan.to_dict()}


def task_refine_study(cfg, out_dir):
    spec = cfg.get("refine", {})
    kind = spec.get("kind", "torus_mc")
    levels = [int(x) for x in spec.get("levels", [4, 8, 16])]
    if len(levels) < 3:
        raise ConfigError("refine-study needs at least 3 levels")
    group = build_group(cfg["group"])
    rows = []
    values = []
    if kind == "torus_mc":
        alpha = _as_complex(spec.get("alpha", [0.4, 0.0]))
        beta = _as_complex(spec.get("beta", [-0.2, 0.0]))
        for n in levels:
            mesh = mc.build_torus(n, n)
            rep = rv.torus_diag_rep(group, mesh, alpha, beta)
            f = hf.curved_torus_map(mesh, rep, float(spec.get("amplitude", 0.3)))
            ctx = TwistedComplex(mesh, rep, f)
            b = ctx.beta()
            res = TwistedCochain(2, ctx.d(b).values
                                 - ctx.bracket_wedge(b, b).values)
            val = ctx.norm(res, 2)
            rows.append([n, 1.0 / n, "mc_residual", val])
            values.append(val)
    elif kind == "circle_energy":
        lam = float(spec.get("lam", 2.0))
        exact = 4.0 * np.log(lam) ** 2
        for n in levels:
            mesh = mc.build_circle(n)
            rep = rv.hyperbolic_circle_rep(group, mesh, lam)
            E, _, _ = hf.energy_of_rep(rep, mesh, tol=cfg["tolerances"]["flow_tol"],
                                       n_starts=1, seed=cfg["seed"])
            val = abs(E - exact)
            rows.append([n, 1.0 / n, "energy_error", val])
            values.append(val)
    elif kind == "harmonic_residuals":
        alpha = _as_complex(spec.get("alpha", [0.4, 0.3]))
        beta = _as_complex(spec.get("beta", [-0.2, 0.5]))
        for n in levels:
            mesh = mc.build_torus(n, n)
            if group.kind == "gl1c":
                rep = rv.torus_gl1c_rep(group, mesh, alpha, beta)
                c = rv.Cocycle(rep, {"a": np.array([[0.4 - 0.1j]]),
                                     "b": np.array([[0.2j]])})
            else:
                rep = rv.torus_diag_rep(group, mesh, alpha, beta)
                c = rv.Cocycle(rep, {"a": np.diag([1.0, -1.0]).astype(complex),
                                     "b": np.zeros((2, 2), dtype=complex)})
            ctx, _, _ = converged_context(cfg, mesh, rep)
            om, _ = ctx.harmonic_rep(c)
            val = max(ctx.norm(ctx.d(om), 2), ctx.norm(ctx.codiff(om), 0))
            rows.append([n, 1.0 / n, "harmonic_residual", val])
            values.append(val)
    else:
        raise ConfigError(f"unknown refine-study kind {kind!r}")
    write_csv(out_dir, "refine_study.csv", ["level", "h", "quantity", "value"], rows)
    vals = np.asarray(values)
    hs = 1.0 / np.asarray(levels, dtype=float)
    slope = float(np.polyfit(np.log(hs), np.log(np.maximum(vals, 1e-300)), 1)[0]) \
        if np.all(vals > 0) else float("nan")
    monotone = bool(np.all(np.diff(vals) < 0))
    return {"kind": kind, "levels": levels, "values": values,
            "fitted_slope": slope, "monotone_decreasing": monotone}


TASK_FUNCS = {
    "flow": task_flow,
    "energy": task_energy,
    "hodge": task_hodge,
    "deform1": task_deform1,
    "deform2": task_deform2,
    "variation": task_variation,
    "psh": task_psh,
    "critical-scan": task_critical_scan,
    "refine-study": task_refine_study,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="equivar-lab",
        description="equivariant harmonic map laboratory")
    parser.add_argument("task", choices=TASKS)
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", default=".")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--tol", type=float, default=None)
    args = parser.parse_args(argv)
    out_dir = Path(args.out)

    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    payload = {"schema_version": SCHEMA_VERSION, "task": args.task,
               "config": cfg}
    try:
        result = TASK_FUNCS[args.task](cfg, out_dir)
        payload["result"] = result
        payload["status"] = "ok"
        write_report(out_dir, args.task, payload)
        return EXIT_OK
    except (ConfigError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        payload["status"] = "validation-error"
        payload["error"] = str(exc)
        write_report(out_dir, args.task, payload)
        return EXIT_VALIDATION
    except FlowNotConverged as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        payload["status"] = "not-converged"
        payload["error"] = str(exc)
        payload["flow"] = exc.report.to_dict()
        write_report(out_dir, args.task, payload)
        return EXIT_NONCONVERGED
    except ObstructedDeformationError as exc:
        print(f"obstructed deformation: {exc}", file=sys.stderr)
        payload["status"] = "obstructed"
        payload["error"] = str(exc)
        payload["obstruction"] = {
            "defect": exc.defect, "scale": exc.scale,
            "witness": exc.witness.values.tolist() if exc.witness is not None else None,
        }
        write_report(out_dir, args.task, payload)
        return EXIT_OBSTRUCTED


if __name__ == "__main__":
    sys.exit(main())
