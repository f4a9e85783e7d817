"""Command-line entry point: ``dipm <subcommand> [--config PATH] ...``.

Exit codes: 0 success, 1 invalid input, 2 runtime abort, 3 failed check.
"""
from __future__ import annotations

import argparse
import csv
import itertools
import json
import math
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, diagnostics, kernels, opcheck, runner as runmod, solver
from .heat1d import NormSpec, Profile, decay_scan
from .params import ConfigError, ParamSet, load_config, params_from_dict
from .spectral import Grid1D

EXIT_OK, EXIT_INVALID, EXIT_ABORT, EXIT_CHECK = 0, 1, 2, 3
DEFAULT_MAX_CELLS = 64
DEFAULT_COMPARE_TOL = 1e-8

SCAN_KEYS = ("n", "L", "norm", "r", "derivs", "frac", "data", "t_min", "t_max",
             "n_times", "young")
SWEEP_KEYS = ("max_cells",)
COMPARE_KEYS = ("compare_tol",)


@dataclass
class RunManifest:
    command: str
    config: dict
    code_version: str
    grid: dict | None = None
    timing: dict = field(default_factory=dict)
    termination: str = "completed"
    exit_code: int = EXIT_OK
    message: str = ""
    files: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def write(self, out_dir: Path) -> Path:
        path = out_dir / "manifest.json"
        data = asdict(self)
        data["files"] = sorted({_rel(p, out_dir) for p in self.files})
        path.write_text(json.dumps(data, indent=2, sort_keys=True, default=_json_default) + "\n")
        return path


def _rel(p, root):
    p = Path(p)
    try:
        return str(p.relative_to(root))
    except ValueError:
        return str(p)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _clean(obj):
    """Replace non-finite floats so JSON stays standard."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _version():
    return f"{__version__} ({kernels.BACKEND} kernels, python {platform.python_version()})"


def _say(args, msg):
    if not getattr(args, "quiet", False):
        print(msg)


def _out_dir(args, command, cfg_out=None) -> Path:
    if args.out:
        root = Path(args.out)
    elif cfg_out:
        root = Path(cfg_out)
    else:
        base = Path(os.environ.get("IPM_OUT_DIR", "runs"))
        stem = Path(args.config).stem if getattr(args, "config", None) else "default"
        root = base / f"{command}-{stem}"
    root.mkdir(parents=True, exist_ok=True)
    return root


def _load_params(args, extra=()) -> tuple[ParamSet, dict, dict]:
    plain, sweep = load_config(args.config, extra_keys=extra) if args.config else ({}, {})
    if args.seed is not None:
        plain["seed"] = args.seed
    params = params_from_dict(plain)
    return params, plain, sweep


def _grid_info(p: ParamSet) -> dict:
    return {"n1": p.n1, "n2": p.n2, "L1": p.L1, "L2": p.L2}


def _write_json(path: Path, data) -> Path:
    path.write_text(json.dumps(_clean(data), indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


# ---------------------------------------------------------------- simulate


def simulate_into(params: ParamSet, out: Path, command="simulate") -> RunManifest:
    """Run one simulation and write its artifacts and manifest into ``out``."""
    man = RunManifest(command, _clean(params.as_dict()), _version(), _grid_info(params))
    t0 = time.time()
    try:
        res = runmod.run(params, out_dir=out)
        man.files += res.files
        man.termination = res.termination
        man.message = res.message
        man.summary = _clean(res.summary())
        man.files.append(_write_json(out / "summary.json", man.summary))
        man.exit_code = EXIT_OK if res.ok else EXIT_ABORT
    except solver.SolverAbort as exc:
        man.termination, man.message, man.exit_code = exc.reason, str(exc), EXIT_ABORT
    finally:
        man.timing = {"started": t0, "wall_seconds": time.time() - t0}
        man.write(out)
    return man


def cmd_simulate(args) -> int:
    params, plain, _ = _load_params(args)
    out = _out_dir(args, "simulate", params.output_dir)
    _say(args, f"simulate: alpha={params.alpha} s={params.s} {params.n1}x{params.n2} "
               f"t_end={params.t_end} -> {out}")
    man = simulate_into(params.replace(mode="decomposed"), out)
    s = man.summary
    if s:
        _say(args, f"  termination={man.termination} steps={s['steps']} "
                   f"max energy residual={s['max_energy_residual']}")
    else:
        _say(args, f"  aborted: {man.message}")
    return man.exit_code


# ---------------------------------------------------------------- decay scan


def _scan_settings(plain: dict) -> dict:
    alpha = float(plain.get("alpha", 0.5))
    r_raw = str(plain.get("r", "")).strip().lower()
    if r_raw in ("inf", "infinity"):
        r = math.inf
    elif r_raw:
        r = float(r_raw)
    else:
        r = 1 / alpha if alpha < 1 else math.inf
    L = float(plain.get("L", plain.get("L2", 2 * math.pi * 200)))
    t_max_default = (L / 10) ** alpha
    out = {
        "alpha": alpha,
        "n": int(plain.get("n", plain.get("n2", 16384))),
        "L": L,
        "profile": str(plain.get("profile", "gaussian")),
        "profile_width": float(plain.get("profile_width", 1.0)),
        "profile_amplitude": float(plain.get("profile_amplitude", 1.0)),
        "norm": str(plain.get("norm", "lp")),
        "r": r,
        "derivs": int(plain.get("derivs", 1)),
        "frac": float(plain.get("frac", 0.0)),
        "q": float(plain.get("q", 1.0)),
        "data": str(plain.get("data", "f")),
        "t_min": float(plain.get("t_min", 1.0)),
        "t_max": float(plain.get("t_max", t_max_default)),
        "n_times": int(plain.get("n_times", 40)),
        "young": str(plain.get("young", "true")).lower() in ("1", "true", "yes"),
    }
    if not 0 < alpha <= 2:
        raise ConfigError("alpha", f"alpha out of (0,2]: {alpha}")
    if out["data"] not in ("f", "grad_f"):
        raise ConfigError("data", "data must be 'f' or 'grad_f'")
    if not 0 < out["t_min"] < out["t_max"]:
        raise ConfigError("t_min", "need 0 < t_min < t_max")
    if out["n_times"] < 2:
        raise ConfigError("n_times", "need at least two scan times")
    return out


def cmd_decay_scan(args) -> int:
    plain = {}
    if args.config:
        plain, _ = load_config(args.config, extra_keys=SCAN_KEYS)
    cfg = _scan_settings(plain)
    try:
        grid = Grid1D(cfg["n"], cfg["L"])
        profile = Profile(cfg["profile"], cfg["profile_width"], cfg["profile_amplitude"])
        norm = NormSpec(cfg["norm"], cfg["derivs"], cfg["frac"], cfg["r"])
    except ValueError as exc:
        raise ConfigError(None, str(exc)) from None
    out = _out_dir(args, "decay-scan", plain.get("output_dir"))
    man = RunManifest("decay-scan", _clean(cfg), _version(), {"n": cfg["n"], "L": cfg["L"]})
    t0 = time.time()
    times = np.geomspace(cfg["t_min"], cfg["t_max"], cfg["n_times"])
    scan = decay_scan(profile, cfg["alpha"], norm, times, grid, cfg["q"], cfg["data"],
                      young=cfg["young"])
    man.files.append(scan.write_csv(out / "decay.csv"))
    man.files.append(scan.write_json(out / "decay.json"))
    man.summary = _clean(scan.summary())
    man.timing = {"started": t0, "wall_seconds": time.time() - t0}
    man.write(out)
    _say(args, f"decay-scan: slope={scan.slope:.6g} self-similar={scan.self_similar_exponent:.6g} "
               f"conclusive={scan.conclusive} envelope_ok={scan.envelope_ok} -> {out}")
    return EXIT_OK


# ---------------------------------------------------------------- opcheck


def cmd_opcheck(args) -> int:
    seed = 0 if args.seed is None else args.seed
    inject = tuple(args.inject or ())
    t0 = time.time()
    try:
        results = opcheck.run_battery(seed=seed, n_fields=args.fields, n=args.n, inject=inject)
    except ValueError as exc:
        raise ConfigError("inject", str(exc)) from None
    for r in results:
        _say(args, r.line())
    failed = [r.name for r in results if not r.passed]
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        man = RunManifest("opcheck", {"seed": seed, "fields": args.fields, "n": args.n,
                                      "inject": list(inject)}, _version())
        man.files.append(_write_json(out / "opcheck.json", [r.as_dict() for r in results]))
        man.summary = {"failed": failed}
        man.exit_code = EXIT_CHECK if failed else EXIT_OK
        man.timing = {"started": t0, "wall_seconds": time.time() - t0}
        man.write(out)
    if failed:
        print(f"opcheck failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


# ---------------------------------------------------------------- compare


def cmd_compare(args) -> int:
    params, plain, _ = _load_params(args, COMPARE_KEYS)
    tol = float(plain.get("compare_tol", DEFAULT_COMPARE_TOL))
    out = _out_dir(args, "compare", params.output_dir)
    man = RunManifest("compare", _clean({**params.as_dict(), "compare_tol": tol}), _version(),
                      _grid_info(params))
    t0 = time.time()
    try:
        dec = runmod.run(params.replace(mode="decomposed"), keep_states=True, diagnostics_on=False)
        full = runmod.run(params.replace(mode="full"), keep_states=True, diagnostics_on=False)
        for res in (dec, full):
            if not res.ok:
                raise solver.SolverAbort(f"{res.params.mode} run: {res.message}")
        diffs = runmod.compare_runs(dec, full)
        path = out / "compare.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "hs_difference"])
            for t, d in diffs:
                w.writerow([f"{t:.17g}", f"{d:.17g}"])
        man.files.append(path)
        worst = max(d for _, d in diffs)
        man.summary = {"max_hs_difference": worst, "tolerance": tol, "passed": worst <= tol}
        man.files.append(_write_json(out / "compare.json", man.summary))
        man.exit_code = EXIT_OK if worst <= tol else EXIT_CHECK
        _say(args, f"compare: max H^s difference {worst:.3e} (tol {tol:.1e}) -> {out}")
    except solver.SolverAbort as exc:
        man.termination = getattr(exc, "reason", "abort")
        man.message = str(exc)
        man.exit_code = EXIT_ABORT
    finally:
        man.timing = {"started": t0, "wall_seconds": time.time() - t0}
        man.write(out)
    return man.exit_code


# ---------------------------------------------------------------- sweep


def _sweep_cell(job):
    """Worker body: validate, run and summarize one sweep cell."""
    index, values, out = job
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    row = {"cell": index, **values}
    try:
        params = params_from_dict(values)
    except (ConfigError, ValueError, TypeError) as exc:
        man = RunManifest("sweep-cell", _clean(values), _version(), termination="invalid",
                          exit_code=EXIT_INVALID, message=str(exc))
        man.write(out)
        return {**row, "status": "failed", "termination": "invalid", "message": str(exc)}
    man = simulate_into(params.replace(mode="decomposed"), out, "sweep-cell")
    s = man.summary or {}
    recs = diagnostics.read_csv(out / "diagnostics.csv") if (out / "diagnostics.csv").exists() else []
    thr = s.get("threshold") or {}
    gr = s.get("gronwall") or {}
    row.update({
        "status": "ok" if man.exit_code == EXIT_OK else "failed",
        "termination": man.termination,
        "message": man.message,
        "t_final": recs[-1].t if recs else None,
        "initial_hs": recs[0].rho1_hs if recs else None,
        "final_hs": recs[-1].rho1_hs if recs else None,
        "peak_hs": max(r.rho1_hs for r in recs) if recs else None,
        "max_energy_residual": s.get("max_energy_residual"),
        "gronwall_violated": gr.get("violated"),
        "c_delta": gr.get("c_delta"),
        "t1": thr.get("t1"),
        "monotone_after_t1": thr.get("monotone_after_t1"),
    })
    return row


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def cmd_sweep(args) -> int:
    if not args.config:
        raise ConfigError("config", "sweep needs --config with sweep.* lists")
    plain, sweep = load_config(args.config, extra_keys=SWEEP_KEYS)
    cap = int(plain.pop("max_cells", args.max_cells))
    if args.seed is not None:
        plain["seed"] = args.seed
    if not sweep:
        raise ConfigError("sweep", "no sweep.* keys in config")
    keys = list(sweep)
    cells = list(itertools.product(*(sweep[k] for k in keys)))
    if len(cells) > cap:
        raise ConfigError("max_cells", f"sweep has {len(cells)} cells, cap is {cap}")
    out = _out_dir(args, "sweep", plain.get("output_dir"))
    plain.pop("output_dir", None)
    jobs = [(i, {**plain, **dict(zip(keys, combo))}, str(out / f"cell_{i:03d}"))
            for i, combo in enumerate(cells)]
    man = RunManifest("sweep", _clean({**plain, **{f"sweep.{k}": v for k, v in sweep.items()}}),
                      _version())
    t0 = time.time()
    workers = max(1, args.workers)
    if workers == 1:
        rows = [_sweep_cell(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_cell, jobs))
    for row in rows:
        _say(args, f"  cell {row['cell']:03d} {row['status']}: "
                   + " ".join(f"{k}={row[k]}" for k in keys))
    cols = ["cell", *keys, "status", "termination", "t_final", "initial_hs", "final_hs",
            "peak_hs", "max_energy_residual", "gronwall_violated", "c_delta", "t1",
            "monotone_after_t1", "message"]
    agg = out / "aggregate.csv"
    with agg.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in cols])
    man.files.append(agg)
    for j in jobs:
        cell_dir = Path(j[2])
        man.files += [p for p in sorted(cell_dir.rglob("*")) if p.is_file()]
    failed = [r["cell"] for r in rows if r["status"] != "ok"]
    man.summary = {"cells": len(rows), "failed_cells": failed}
    man.timing = {"started": t0, "wall_seconds": time.time() - t0}
    man.write(out)
    _say(args, f"sweep: {len(rows) - len(failed)}/{len(rows)} cells ok -> {out}")
    return EXIT_OK


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value configuration file")
    common.add_argument("--out", metavar="DIR", help="output directory (default: $IPM_OUT_DIR)")
    common.add_argument("--seed", type=int, help="override the random seed")
    common.add_argument("--workers", type=int, default=1, help="sweep worker processes")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")

    ap = argparse.ArgumentParser(prog="dipm", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"dipm {_version()}")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="decomposed-mode run with diagnostics")
    sub.add_parser("decay-scan", parents=[common], help="1-D background decay scan")
    p = sub.add_parser("opcheck", parents=[common], help="operator identity battery")
    p.add_argument("--fields", type=int, default=100, help="random fields per check")
    p.add_argument("--n", type=int, default=256, help="grid size")
    p.add_argument("--inject", action="append", metavar="CHECK",
                   help="corrupt the named check's symbol (test mode)")
    sub.add_parser("compare", parents=[common], help="full vs decomposed runs")
    p = sub.add_parser("sweep", parents=[common], help="cartesian parameter sweep")
    p.add_argument("--max-cells", type=int, default=DEFAULT_MAX_CELLS)
    return ap


COMMANDS = {
    "simulate": cmd_simulate,
    "decay-scan": cmd_decay_scan,
    "opcheck": cmd_opcheck,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except solver.SolverAbort as exc:
        print(f"aborted ({exc.reason}): {exc}", file=sys.stderr)
        return EXIT_ABORT
    except (OSError, RuntimeError, FloatingPointError) as exc:
        print(f"aborted: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
