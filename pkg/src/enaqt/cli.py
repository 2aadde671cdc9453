"""Command-line interface.

Every subcommand accepts ``--config FILE`` plus dotted overrides such as
``--bath.lambda_cm1 35``.  Exit status: 0 success, 1 invalid input,
2 numerical failure.  Artifacts are written atomically and carry a metadata
block (version, config hash, seed); wall time is reported on stdout only so
reruns produce byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bath import BathSpec
from .config import COMMANDS, build_config, config_hash, load_config_file, parse_value
from .dynamics import propagate_time
from .ensembles import (
    EnsembleSpec,
    connectivity_paths,
    ground_trap_overlap,
    perturbation_ensemble,
    run_ensemble,
    site_count_scan,
)
from .errors import NumericalError
from .landscape import (
    GridAxis,
    model_governing_parameter,
    stencil_gradient_norm,
    stencil_hessian_norm,
    sweep,
    trap_site_scan,
)
from .model import (
    ExcitonModel,
    PerturbationSpec,
    energy_scale_g,
    fmo_canonical,
    fmo_geometry,
    load_geometry,
)
from .solver import SolverOptions, TransferProblem, ete_frequency, mixed_state

# command-line shortcuts -> dotted config paths
_SHORTCUTS = {
    "geometry": "model.geometry_file",
    "axis1": "sweep.axis1",
    "axis2": "sweep.axis2",
    "sites": "ensemble.sites",
    "diameter": None,  # ensemble or site_scan depending on command
    "samples": None,
    "seed": "seed",
    "threads": "threads",
    "out": "output.out",
    "dump_geometries": "output.dump_geometries",
    "t_max": "solver.t_max_ps",
    "n_min": "site_scan.n_min",
    "n_max": "site_scan.n_max",
    "mode": "robustness.mode",
    "method": "solver.method",
}


class _Fail(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------- artifacts


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dump_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def _csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    return buf.getvalue()


def _fmt(x):
    if isinstance(x, str):
        return x
    x = float(x)
    return "nan" if math.isnan(x) else repr(x)


def grid_csv(axis1_vals, axis2_vals, body, corner: str) -> str:
    rows = [[corner, *axis2_vals]]
    rows += [[a, *row] for a, row in zip(axis1_vals, body)]
    return _csv_text(rows)


def _sidecar(path: str, suffix: str) -> str:
    p = Path(path)
    return str(p.with_name(p.stem + suffix)) if p.suffix == ".csv" else str(p) + suffix


# ------------------------------------------------------------------ helpers


def _model(cfg) -> ExcitonModel:
    m = cfg["model"]
    if m["source"] == "builtin-fmo":
        base = fmo_canonical()
        trap = m["trap_site"] or 3
    else:
        geom = load_geometry(m["geometry_file"])
        base = ExcitonModel.from_geometry(geom, trap_site=geom.n_sites)
        trap = m["trap_site"] or geom.n_sites
    return base.with_(
        initial_site=m["initial_site"],
        trap_site=trap,
        trap_rate=m["trap_rate_ps"],
        loss_rate=m["loss_rate_ps"],
    )


def _bath(cfg) -> BathSpec:
    return BathSpec.from_dict(cfg["bath"])


def _options(cfg) -> SolverOptions:
    s = cfg["solver"]
    return SolverOptions(s["time_convention"], s["ohmic_fit_terms"], s["ohmic_t_max"], s["ohmic_rel_tol"])


def _problem(cfg) -> TransferProblem:
    model = _model(cfg)
    rho = mixed_state(model.n_sites) if cfg["model"]["initial_state"] == "mixed" else None
    return TransferProblem(model, _bath(cfg), rho, _options(cfg))


def _require_out(cfg) -> str:
    out = cfg["output"]["out"]
    if not out:
        raise ValueError(f"{cfg['command']} needs --out")
    return out


# ----------------------------------------------------------------- commands


def cmd_ete(cfg, meta):
    res = ete_frequency(_problem(cfg))
    payload = {"ete": res.ete, "loss_fraction": res.loss_fraction, "solver": res.solver}
    artifact = {**payload, "diagnostics": res.diagnostics, "metadata": meta}
    return payload, ({cfg["output"]["out"]: dump_json(artifact)} if cfg["output"]["out"] else {})


def cmd_dynamics(cfg, meta):
    out = _require_out(cfg)
    s = cfg["solver"]
    problem = _problem(cfg)
    traj = propagate_time(problem, s["t_max_ps"], n_points=s["n_points"], method=s["method"])
    n = problem.n_sites
    header = ["t_ps", *[f"p_{i}" for i in range(1, n + 1)], "trace", "eta_cumulative"]
    rows = [header]
    for k in range(len(traj.t_ps)):
        rows.append([traj.t_ps[k], *traj.populations[k], traj.trace[k], traj.eta_cumulative[k]])
    res = traj.result
    side = {"result": {"ete": res.ete, "loss_fraction": res.loss_fraction}, "diagnostics": res.diagnostics, "metadata": meta}
    payload = {"ete": res.ete, "loss_fraction": res.loss_fraction, "solver": "time"}
    return payload, {out: _csv_text(rows), _sidecar(out, ".json"): dump_json(side)}


def cmd_sweep(cfg, meta):
    out = _require_out(cfg)
    sw = cfg["sweep"]
    ax1, ax2 = GridAxis.parse(sw["axis1"]), GridAxis.parse(sw["axis2"])
    grid = sweep(_model(cfg), _bath(cfg), ax1, ax2, _options(cfg), threads=cfg["threads"])
    corner = f"{ax1.name}\\{ax2.name}"
    files = {out: grid_csv(ax1.values, ax2.values, grid.ete, corner)}
    side = {
        "axis1": str(ax1),
        "axis2": str(ax2),
        "failed_points": int(grid.failed.sum()),
        "failed_cells": np.argwhere(grid.failed & ~grid.unphysical).tolist(),
        "unphysical_cells": [
            [int(i), int(j), float(grid.raw[i, j])] for i, j in np.argwhere(grid.unphysical)
        ],
        "bath": cfg["bath"],
        "metadata": meta,
    }
    if sw["metrics"]:
        files[_sidecar(out, ".grad.csv")] = grid_csv(
            ax1.values[2:-2], ax2.values[2:-2], stencil_gradient_norm(grid), corner
        )
        files[_sidecar(out, ".hess.csv")] = grid_csv(
            ax1.values[2:-2], ax2.values[2:-2], stencil_hessian_norm(grid, sw["frobenius"]), corner
        )
        side["hessian_norm"] = "frobenius" if sw["frobenius"] else "spectral"
    files[_sidecar(out, ".json")] = dump_json(side)
    finite = grid.ete[np.isfinite(grid.ete)]
    payload = {
        "points": int(grid.ete.size),
        "failed": int(grid.failed.sum()),
        "unphysical": int(grid.unphysical.sum()),
        "ete_max": float(finite.max()) if finite.size else None,
        "ete_min": float(finite.min()) if finite.size else None,
    }
    return payload, files


def cmd_trap_scan(cfg, meta):
    etes = trap_site_scan(_model(cfg), _bath(cfg), _options(cfg))
    best = int(np.argmax(etes)) + 1
    payload = {"ete_by_trap_site": etes, "argmax_site": best}
    files = {}
    if cfg["output"]["out"]:
        files[cfg["output"]["out"]] = dump_json({**payload, "initial_state": "I/N", "metadata": meta})
    return payload, files


def _ensemble_spec(cfg) -> EnsembleSpec:
    e = cfg["ensemble"]
    m = cfg["model"]
    return EnsembleSpec(
        n_sites=e["sites"],
        diameter=e["diameter"],
        n_samples=e["samples"],
        bath=_bath(cfg),
        seed=cfg["seed"],
        energy_range=(0.0, e["energy_max"]),
        endpoint_mode=e["endpoint_mode"],
        trap_rate=m["trap_rate_ps"],
        loss_rate=m["loss_rate_ps"],
        options=_options(cfg),
    )


def cmd_ensemble(cfg, meta):
    out = _require_out(cfg)
    dump = cfg["output"]["dump_geometries"]
    report = run_ensemble(_ensemble_spec(cfg), cfg["threads"], keep_geometries=bool(dump))
    data = report.to_dict()
    data["metadata"] = meta
    files = {out: dump_json(data)}
    if dump:
        for i, g in enumerate(report.geometries):
            files[str(Path(dump) / f"sample_{i:06d}.json")] = dump_json(g.to_dict())
    agg = report.aggregates()
    payload = {"mean": agg["mean"], "std": agg["std"], "n_samples": agg["n_samples"], "n_failed": agg["n_failed"]}
    return payload, files


def cmd_site_scan(cfg, meta):
    s = cfg["site_scan"]
    rows = site_count_scan(
        s["diameter"], range(s["n_min"], s["n_max"] + 1), s["samples"], _bath(cfg), cfg["seed"], cfg["threads"]
    )
    payload = {"diameter": s["diameter"], "rows": rows}
    files = {}
    if cfg["output"]["out"]:
        files[cfg["output"]["out"]] = dump_json({**payload, "metadata": meta})
    return payload, files


def cmd_robustness(cfg, meta):
    r = cfg["robustness"]
    if r["mode"] == "small":
        pspec = PerturbationSpec(r["pos_jitter"], math.radians(r["angle_jitter_deg"]), r["energy_jitter"])
    else:
        pspec = PerturbationSpec.large_variation(r["pos_jitter"])
    model = _model(cfg)
    etes = perturbation_ensemble(
        model, pspec, r["samples"], _bath(cfg), cfg["seed"], cfg["threads"], _options(cfg)
    )
    valid = etes[np.isfinite(etes)]
    payload = {
        "mode": r["mode"],
        "samples": int(len(etes)),
        "fraction_above_0.9": float(np.mean(valid > 0.9)) if valid.size else None,
        "mean": float(valid.mean()) if valid.size else None,
    }
    files = {}
    if cfg["output"]["out"]:
        files[cfg["output"]["out"]] = dump_json({**payload, "ete": etes, "metadata": meta})
    return payload, files


def cmd_paths(cfg, meta):
    model = _model(cfg)
    thr = cfg["paths"]["threshold_cm1"]
    paths = connectivity_paths(model)
    payload = {
        "n_paths": len(paths),
        "dominant_paths": sum(1 for _, s in paths if s > thr),
        "max_strength": max(s for _, s in paths),
        "ground_trap_overlap": ground_trap_overlap(model),
        "g_cm1": energy_scale_g(model.hamiltonian),
        "governing_parameter": model_governing_parameter(model, _bath(cfg)),
    }
    files = {}
    if cfg["output"]["out"]:
        body = {
            **payload,
            "threshold_cm1": thr,
            "paths": [{"path": list(p), "strength": s} for p, s in paths],
            "metadata": meta,
        }
        files[cfg["output"]["out"]] = dump_json(body)
    return payload, files


def cmd_export_fmo(cfg, meta):
    out = cfg["output"]["out"] or "."
    model = fmo_canonical()
    ham = {
        "hamiltonian_cm1": model.hamiltonian.tolist(),
        "initial_site": model.initial_site,
        "trap_site": model.trap_site,
        "trap_rate_ps": model.trap_rate,
        "loss_rate_ps": model.loss_rate,
        "metadata": meta,
    }
    files = {
        str(Path(out) / "fmo_hamiltonian.json"): dump_json(ham),
        str(Path(out) / "fmo_geometry.json"): dump_json(fmo_geometry().to_dict()),
    }
    return {"files": sorted(files)}, files


HANDLERS = {
    "ete": cmd_ete,
    "dynamics": cmd_dynamics,
    "sweep": cmd_sweep,
    "trap-scan": cmd_trap_scan,
    "ensemble": cmd_ensemble,
    "site-scan": cmd_site_scan,
    "robustness": cmd_robustness,
    "paths": cmd_paths,
    "export-fmo": cmd_export_fmo,
}


# ------------------------------------------------------------------ parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="enaqt",
        description="Energy transfer efficiency of exciton networks.",
        epilog="Any config field can be overridden with a dotted flag, e.g. --bath.lambda_cm1 100.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON run configuration")
        src = sp.add_mutually_exclusive_group()
        src.add_argument("--builtin-fmo", action="store_true", help="use the built-in FMO monomer (default)")
        src.add_argument("--geometry", help="geometry JSON file")
        sp.add_argument("--out")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--threads", type=int)
        if name == "sweep":
            sp.add_argument("--axis1")
            sp.add_argument("--axis2")
            sp.add_argument("--metrics", action="store_true")
        if name in ("ensemble", "site-scan"):
            sp.add_argument("--diameter", type=float)
            sp.add_argument("--samples", type=int)
        if name == "ensemble":
            sp.add_argument("--sites", type=int)
            sp.add_argument("--dump-geometries")
        if name == "site-scan":
            sp.add_argument("--n-min", type=int)
            sp.add_argument("--n-max", type=int)
        if name == "robustness":
            sp.add_argument("--mode", choices=["small", "large"])
            sp.add_argument("--samples", type=int)
        if name == "dynamics":
            sp.add_argument("--t-max", type=float, help="ps")
            sp.add_argument("--method", choices=["eig", "expm", "rk"])
    return p


def _dotted_overrides(extra: list[str]) -> list[tuple[str, object]]:
    out = []
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--") or "." not in tok:
            raise ValueError(f"unrecognized argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, val = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extra):
                raise ValueError(f"missing value for {tok}")
            val = extra[i + 1]
            i += 2
        out.append((key, parse_value(val)))
    return out


def _flag_overrides(ns: argparse.Namespace) -> list[tuple[str, object]]:
    out = []
    if ns.builtin_fmo:
        out += [("model.source", "builtin-fmo"), ("model.geometry_file", None)]
    if getattr(ns, "geometry", None):
        out += [("model.source", "geometry"), ("model.geometry_file", ns.geometry)]
    section = {"ensemble": "ensemble", "site-scan": "site_scan", "robustness": "robustness"}.get(ns.command)
    for key, path in _SHORTCUTS.items():
        if key == "geometry":
            continue
        val = getattr(ns, key, None)
        if val is None:
            continue
        if path is None:
            path = f"{section}.{key}"
        out.append((path, val))
    if getattr(ns, "metrics", False):
        out.append(("sweep.metrics", True))
    return out


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    t0 = time.perf_counter()
    try:
        ns, extra = parser.parse_known_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        try:
            file_cfg = load_config_file(ns.config) if ns.config else {}
            overrides = _flag_overrides(ns) + _dotted_overrides(extra)
            cfg = build_config(ns.command, file_cfg, overrides)
        except (ValueError, OSError) as exc:
            raise _Fail(1, f"validation error: {exc}") from None
        meta = {"tool": "enaqt", "version": __version__, "config_hash": config_hash(cfg), "seed": cfg["seed"]}
        try:
            payload, files = HANDLERS[ns.command](cfg, meta)
        except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
            raise _Fail(2, f"numerical failure: {exc}") from None
        except (ValueError, OSError, KeyError) as exc:
            raise _Fail(1, f"validation error: {exc}") from None
        for path, text in files.items():
            atomic_write(path, text)
    except _Fail as f:
        print(json.dumps({"command": ns.command, "status": "error", "exit_code": f.code, "error": str(f)}), file=stdout)
        print(str(f), file=sys.stderr)
        return f.code
    summary = {
        "command": ns.command,
        "status": "ok",
        **_clean(payload),
        "config_hash": meta["config_hash"],
        "seed": cfg["seed"],
        "version": __version__,
        "wall_time_s": round(time.perf_counter() - t0, 3),
    }
    print(json.dumps(summary, sort_keys=False), file=stdout)
    return 0


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
