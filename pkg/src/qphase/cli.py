"""Command-line front end: ``qphase run SCENARIO`` and ``qphase verify SUITE``.

Exit codes: 0 when every declared check passes, 1 when a check or a
numerical task fails, 2 for usage or scenario-schema errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from . import dynamics as dyn
from . import fermi, io, symplectic
from .grid import Grid, GridError, PhysicsParams
from .states import NotAnEigenstateError, Potential, StateError, StateSpec, default_grid, exact_energy, exact_potential, realize
from .wavefield import core_mask, covariance_matrix, node_mask, polar_decompose, quantum_potential

SUMMARY_VERSION = 1
log = logging.getLogger("qphase")


class ScenarioError(ValueError):
    """Scenario file is malformed; message carries the line number."""


class TaskError(RuntimeError):
    pass


# --- scenario loading --------------------------------------------------------


def _locate(text: str, path: list) -> int:
    """Character offset of the JSON value at ``path`` (keys / indices) in ``text``."""
    dec = json.JSONDecoder()
    ws = " \t\r\n"

    def skip(i: int) -> int:
        while i < len(text) and text[i] in ws:
            i += 1
        return i

    pos = skip(0)
    for key in path:
        if text[pos] == "{":
            i = skip(pos + 1)
            while text[i] != "}":
                name, i = dec.raw_decode(text, i)
                i = skip(skip(i) + 1)  # past ':'
                if name == key:
                    pos = i
                    break
                _, i = dec.raw_decode(text, i)
                i = skip(i)
                if text[i] == ",":
                    i = skip(i + 1)
            else:
                return pos
        elif text[pos] == "[":
            i = skip(pos + 1)
            for _ in range(int(key)):
                _, i = dec.raw_decode(text, i)
                i = skip(skip(i) + 1)
            pos = i
        else:
            return pos
    return pos


def _schema() -> dict:
    return json.loads(resources.files("qphase").joinpath("schemas/scenario.schema.json").read_text())


def load_scenario(path: str | Path) -> dict:
    """Parse and validate a scenario file; errors name the offending line."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"{path}: cannot read scenario ({exc.strerror})") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    validator = jsonschema.Draft202012Validator(_schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        err = errors[0]
        where = list(err.absolute_path)
        line = text.count("\n", 0, _locate(text, where)) + 1
        loc = "/".join(map(str, where)) or "<root>"
        raise ScenarioError(f"{path}:{line}: {loc}: {err.message}")
    return data


# --- building objects from the scenario --------------------------------------


def _state_spec(sc: dict) -> StateSpec:
    st = dict(sc["state"])
    st.pop("dim", None)
    phys = sc.get("physics", {})
    params = PhysicsParams(phys.get("mass", 1.0), phys.get("hbar", 1.0))
    kind = st.pop("kind")
    if kind == "well1d":
        st.setdefault("n", 1)
    return StateSpec(kind, params, **st)


def _grid(sc: dict, spec: StateSpec) -> Grid:
    g = sc.get("grid")
    if g is None:
        return default_grid(spec, dim=sc["state"].get("dim"))
    n = g["n_points"]
    dim = g.get("dim") or (len(n) if isinstance(n, list) else sc["state"].get("dim") or (3 if spec.kind == "coherent3d" else 1))
    n = tuple(n) if isinstance(n, list) else (n,) * dim
    lo, hi = g["lower"], g["upper"]
    lo = tuple(lo) if isinstance(lo, list) else (lo,) * dim
    hi = tuple(hi) if isinstance(hi, list) else (hi,) * dim
    return Grid(n, lo, hi, g.get("periodic", spec.kind != "well1d"))


def _potential(sc: dict, spec: StateSpec) -> Potential:
    p = sc.get("potential")
    if p is not None:
        return Potential(p["kind"], spec.params.mass, p.get("omega", spec.omega))
    if spec.is_eigenstate:
        return exact_potential(spec)
    return Potential("free", spec.params.mass, spec.omega)


def apply_overrides(sc: dict, args: argparse.Namespace) -> dict:
    sc = json.loads(json.dumps(sc))
    phys = sc.setdefault("physics", {})
    for name in ("hbar", "mass"):
        v = getattr(args, name)
        if v is not None:
            log.warning("override: physics.%s = %g (scenario: %s)", name, v, phys.get(name, "default"))
            phys[name] = v
    if args.omega is not None:
        log.warning("override: omega = %g (scenario: %s)", args.omega, sc["state"].get("omega", "default"))
        sc["state"]["omega"] = args.omega
        if "potential" in sc:
            sc["potential"]["omega"] = args.omega
    if args.seed is not None:
        log.warning("override: seed = %d (scenario: %s)", args.seed, sc.get("seed", "default"))
        sc["seed"] = args.seed
    if args.out is not None:
        log.warning("override: output_dir = %s (scenario: %s)", args.out, sc.get("output_dir", "default"))
        sc["output_dir"] = args.out
    if args.grid_override is not None:
        parts = args.grid_override.split(":")
        if len(parts) not in (1, 3):
            raise ScenarioError("--grid-override expects N or N:LOWER:UPPER")
        g = dict(sc.get("grid") or {})
        g["n_points"] = int(parts[0])
        if len(parts) == 3:
            g["lower"], g["upper"] = float(parts[1]), float(parts[2])
        elif "lower" not in g:
            spec = _state_spec(sc)
            base = default_grid(spec, dim=sc["state"].get("dim"))
            g.update(lower=list(base.lower), upper=list(base.upper), periodic=base.periodic)
        log.warning("override: grid = %s", g)
        sc["grid"] = g
    return sc


# --- tasks -----------------------------------------------------------------------


class Context:
    def __init__(self, sc: dict, out: Path):
        self.sc = sc
        self.out = out
        self.spec = _state_spec(sc)
        self.grid = _grid(sc, self.spec)
        self.V = _potential(sc, self.spec)
        self.rng = np.random.default_rng(sc.get("seed", 0))
        self.wf = realize(self.spec, self.grid)
        self.timeseries: dyn.Timeseries | None = None

    def path(self, name: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        return self.out / name


def _closed_form_q(ctx: Context) -> np.ndarray | None:
    spec, grid = ctx.spec, ctx.grid
    if spec.kind == "coherent3d" or (spec.kind == "oscillator1d" and spec.n == 0):
        m, w, hb = spec.params.mass, spec.omega, spec.params.hbar
        return grid.dim * hb * w / 2 - 0.5 * m * w**2 * grid.radius_squared()
    return None


def task_decompose(ctx: Context, opts: dict) -> tuple[dict, list]:
    pol = polar_decompose(ctx.wf)
    arts = []
    if opts.get("write_fields", True):
        from .fields import ScalarField

        arts.append(io.write_field_csv(ctx.path("amplitude.csv"), ScalarField(ctx.grid, pol.R, np.zeros_like(pol.node_mask))))
        arts.append(io.write_field_csv(ctx.path("phase.csv"), ScalarField(ctx.grid, pol.S, pol.node_mask)))
    return {"max_R": float(pol.R.max()), "masked_points": int(pol.node_mask.sum())}, arts


def task_qpot(ctx: Context, opts: dict) -> tuple[dict, list]:
    Q = quantum_potential(ctx.wf)
    centre = tuple(int(np.argmin(np.abs(ax))) for ax in ctx.grid.axes)
    vals = {"Q_at_origin_gridpoint": float(Q.values[centre]), "origin_gridpoint": [float(ax[i]) for ax, i in zip(ctx.grid.axes, centre)]}
    exact = _closed_form_q(ctx)
    if exact is not None:
        sel = core_mask(ctx.wf) & ~Q.mask
        vals["max_interior_error_vs_closed_form"] = float(np.max(np.abs(Q.values[sel] - exact[sel])))
    arts = [io.write_field_csv(ctx.path("qpot.csv"), Q)] if opts.get("write_fields", True) else []
    return vals, arts


def task_energy(ctx: Context, opts: dict) -> tuple[dict, list]:
    dec = fermi.energy_decomposition(ctx.wf, ctx.V)
    vals: dict[str, Any] = {}
    region = fermi.default_region(ctx.wf) & ~dec.total.mask
    try:
        E = exact_energy(ctx.spec)
        vals.update(exact_energy=E, max_interior_total_minus_E=float(np.max(np.abs(dec.total.values[region] - E))))
    except NotAnEigenstateError:
        vals["mean_total"] = float(ctx.grid.integrate(np.abs(ctx.wf.psi) ** 2 * dec.total.filled()))
    arts = []
    if opts.get("write_fields", True):
        for name in ("kinetic", "quantum", "potential", "total"):
            arts.append(io.write_field_csv(ctx.path(f"energy_{name}.csv"), getattr(dec, name)))
    return vals, arts


def task_fermi_residual(ctx: Context, opts: dict) -> tuple[dict, list]:
    return {"residual": fermi.fermi_operator_residual(ctx.wf)}, []


def task_fermi_surface(ctx: Context, opts: dict) -> tuple[dict, list]:
    fh = fermi.build_fermi_hamiltonian(ctx.wf)
    samples = fermi.sample_fermi_surface(fh, opts.get("n_samples", 1000), ctx.rng)
    vol, err = fermi.fermi_volume_mc(fh, opts.get("n_samples", 1000) * 100, ctx.rng)
    vals = {
        "n_samples": len(samples),
        "max_abs_H_F": float(np.max(np.abs(samples[:, -1]))) if len(samples) else float("nan"),
        "mc_volume": vol,
        "mc_volume_stderr": err,
    }
    return vals, [io.write_surface_csv(ctx.path("fermi_surface.csv"), samples, ctx.grid.dim)]


def _fermi_set(ctx: Context) -> fermi.FermiSetQuadratic:
    return fermi.fermi_set_quadratic(ctx.spec)


def task_capacity(ctx: Context, opts: dict) -> tuple[dict, list]:
    fs = _fermi_set(ctx)
    cap = symplectic.capacity_quadratic(fs.form)
    h = ctx.spec.params.h
    vals = {"capacity": cap, "capacity_in_h_half": cap / (h / 2), "capacity_in_h": cap / h}
    vals["section_areas"] = [symplectic.conjugate_section_area(fs.form, k) for k in range(1, fs.form.n + 1)]
    report = {"fermi_set": fs.to_dict(), **vals}
    return vals, [io.write_json(ctx.path("capacity.json"), report)]


def task_blob_check(ctx: Context, opts: dict) -> tuple[dict, list]:
    res = symplectic.quantum_blob_contained(_fermi_set(ctx).form, ctx.spec.params.hbar)
    return {"ratio": res.ratio, "capacity": res.capacity, "contains_quantum_blob": res.passed}, []


def task_rs_check(ctx: Context, opts: dict) -> tuple[dict, list]:
    cov = covariance_matrix(ctx.wf)
    res = symplectic.rs_check(cov, ctx.spec.params.hbar)
    vals = {"satisfied": res.passed, "margin": res.margin, "symplectic_eigenvalues": list(res.nu)}
    return vals, [io.write_json(ctx.path("covariance.json"), {"sigma": cov.sigma, "mean": cov.mean, **vals})]


def _propagation(ctx: Context, opts: dict) -> dyn.PropagationConfig:
    return dyn.PropagationConfig(
        opts.get("dt", 1e-3),
        opts.get("n_steps", 100),
        ctx.V,
        opts.get("record_every", 1),
        q_refresh=opts.get("q_refresh", "half"),
        dealias=opts.get("dealias", True),
    )


def _evolve(ctx: Context, opts: dict, classical: bool) -> tuple[dict, list]:
    cfg = _propagation(ctx, opts)
    run = dyn.propagate_classical_nonlinear if classical else dyn.propagate_schrodinger
    ts = run(ctx.wf, cfg)
    ctx.timeseries = ts
    norms = [f.norm2() for f in ts.frames]
    rho0 = np.abs(ts.frames[0].psi) ** 2
    vals = {
        "frames": len(ts),
        "final_time": float(ts.times[-1]),
        "max_norm_drift": float(np.max(np.abs(np.array(norms) - 1))),
        "max_density_change": float(max(np.max(np.abs(np.abs(f.psi) ** 2 - rho0)) for f in ts.frames)),
    }
    name = "timeseries_classical" if classical else "timeseries"
    return vals, [io.save_timeseries(ctx.path(name), ts)]


def task_evolve(ctx: Context, opts: dict) -> tuple[dict, list]:
    return _evolve(ctx, opts, classical=False)


def task_evolve_classical(ctx: Context, opts: dict) -> tuple[dict, list]:
    return _evolve(ctx, opts, classical=True)


def _need_timeseries(ctx: Context) -> dyn.Timeseries:
    if ctx.timeseries is None:
        raise TaskError("needs a preceding evolve or evolve-classical task")
    return ctx.timeseries


def task_residuals(ctx: Context, opts: dict) -> tuple[dict, list]:
    ts = _need_timeseries(ctx)
    res = dyn.madelung_residuals(ts, ctx.V, include_q=opts.get("include_q", True))
    rows = []
    for t, hj, c, reg, off in zip(res.times, res.hj, res.continuity, res.regions, res.offsets()):
        v = hj.values[reg & ~hj.mask]
        rows.append((t, 0.5 * (v.max() - v.min()), off, np.max(np.abs(c.values[reg & ~c.mask]))))
    vals = {"max_hj_residual": res.max_hj(), "max_continuity_residual": res.max_continuity(), "frames": len(rows)}
    art = io.write_table_csv(ctx.path("residuals.csv"), ["t", "hj_residual", "hj_offset", "continuity_residual"], rows)
    return vals, [art]


def task_trajectories(ctx: Context, opts: dict) -> tuple[dict, list]:
    ts = _need_timeseries(ctx)
    seeds = dyn.sample_seeds(ts.frames[0], opts.get("n_seeds", 100), ctx.rng)
    ens = dyn.integrate_bohm_trajectories(ts, seeds, opts.get("substeps", 1))
    disp = ens.displacement()
    vals = {
        "n_seeds": len(seeds),
        "max_displacement": float(np.nanmax(disp)) if np.isfinite(disp).any() else float("nan"),
        "status_counts": {s: ens.status.count(s) for s in ("ok", "exited", "node")},
    }
    return vals, [io.write_trajectories_csv(ctx.path("trajectories.csv"), ens)]


def task_nodes(ctx: Context, opts: dict) -> tuple[dict, list]:
    rep = dyn.node_diagnostics(ctx.wf)
    d = rep.to_dict()
    vals = {"node_count": len(rep.nodes), "node_positions": [n.position for n in rep.nodes]}
    if ctx.spec.kind == "well1d":
        vals["node_positions_in_L"] = [n.position / ctx.spec.L for n in rep.nodes]
    return vals, [io.write_json(ctx.path("nodes.json"), d)]


TASKS = {
    "decompose": task_decompose,
    "qpot": task_qpot,
    "energy": task_energy,
    "fermi-residual": task_fermi_residual,
    "fermi-surface": task_fermi_surface,
    "capacity": task_capacity,
    "blob-check": task_blob_check,
    "rs-check": task_rs_check,
    "evolve": task_evolve,
    "evolve-classical": task_evolve_classical,
    "residuals": task_residuals,
    "trajectories": task_trajectories,
    "nodes": task_nodes,
}
# boolean outcomes that count as checks even when none are declared
INTRINSIC = {"blob-check": "contains_quantum_blob", "rs-check": "satisfied"}
OPS = {"<": np.less, "<=": np.less_equal, ">": np.greater, ">=": np.greater_equal}


def _evaluate_checks(task: dict, values: dict) -> list[dict]:
    out = []
    name = task["task"]
    if name in INTRINSIC:
        key = INTRINSIC[name]
        out.append({"value": key, "op": "==", "limit": True, "measured": values[key], "passed": bool(values[key])})
    for chk in task.get("checks", []):
        measured = values.get(chk["value"])
        if not isinstance(measured, (int, float)) or isinstance(measured, bool):
            raise ScenarioError(f"task {name!r}: check refers to unknown numeric value {chk['value']!r}")
        ok = bool(OPS[chk["op"]](measured, chk["limit"]))
        out.append({**chk, "measured": measured, "passed": ok})
    return out


def run_scenario(sc: dict, source: str = "<scenario>") -> tuple[dict, int]:
    out = Path(sc.get("output_dir", "qphase_out"))
    summary: dict[str, Any] = {
        "summary_version": SUMMARY_VERSION,
        "scenario": source,
        "seed": sc.get("seed", 0),
        "tasks": [],
    }
    code = 0
    try:
        ctx = Context(sc, out)
    except (StateError, GridError, ValueError) as exc:
        summary.update(passed=False, error=f"scenario setup failed: {exc}")
        io.write_json(out / "summary.json", summary)
        return summary, 2
    summary["state"] = ctx.spec.to_dict()
    summary["grid"] = ctx.grid.to_dict()
    for index, task in enumerate(sc.get("analysis", [])):
        opts = {k: v for k, v in task.items() if k not in ("task", "checks")}
        entry: dict[str, Any] = {"task": task["task"], "index": index, "options": opts}
        try:
            values, arts = TASKS[task["task"]](ctx, opts)
            checks = _evaluate_checks(task, values)
            entry.update(values=values, checks=checks, artifacts=[str(a) for a in arts])
            entry["passed"] = all(c["passed"] for c in checks)
        except ScenarioError:
            raise
        except Exception as exc:  # numerical task failure: reported, not propagated
            entry.update(passed=False, error=f"{type(exc).__name__}: {exc}")
            log.error("task %d (%s) failed: %s", index, task["task"], exc)
        if not entry["passed"]:
            code = 1
            log.error("task %d (%s) did not pass", index, task["task"])
        summary["tasks"].append(entry)
    summary["passed"] = code == 0
    io.write_json(out / "summary.json", summary)
    return summary, code


# --- entry point -----------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qphase", description="Quantum potential, Fermi sets and symplectic capacities.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the tasks of a JSON scenario")
    r.add_argument("scenario", help="path to the scenario JSON file")
    r.add_argument("--grid-override", metavar="N[:LO:HI]", help="points per axis, optionally with new bounds")
    r.add_argument("--hbar", type=float)
    r.add_argument("--mass", type=float)
    r.add_argument("--omega", type=float)
    r.add_argument("--seed", type=int)
    r.add_argument("--out", help="output directory")
    v = sub.add_parser("verify", help="run a built-in acceptance suite")
    v.add_argument("suite", choices=["oscillator", "well", "dynamics", "symplectic", "all"])
    v.add_argument("--json", metavar="PATH", help="also write the verdict to PATH")
    return p


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s", stream=sys.stderr)
    args = _parser().parse_args(argv)
    if args.command == "verify":
        from .verification import run_suite

        crits = run_suite(args.suite, report=lambda c: print(c.line(), file=sys.stderr))
        verdict = {
            "summary_version": SUMMARY_VERSION,
            "suite": args.suite,
            "passed": all(c.passed for c in crits),
            "criteria": [c.to_dict() for c in crits],
        }
        text = json.dumps(io._jsonable(verdict), indent=2, sort_keys=True)
        print(text)
        if args.json:
            Path(args.json).write_text(text + "\n")
        return 0 if verdict["passed"] else 1
    try:
        sc = apply_overrides(load_scenario(args.scenario), args)
        summary, code = run_scenario(sc, args.scenario)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(io._jsonable({"passed": summary["passed"], "summary": str(Path(sc.get("output_dir", "qphase_out")) / "summary.json")})))
    return code


if __name__ == "__main__":
    sys.exit(main())
