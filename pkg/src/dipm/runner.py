"""Time loops, checkpoints and trajectory comparison."""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import diagnostics, solver
from .params import ParamSet, params_from_dict
from .spectral import Grid1D, Grid2D, SpecField, sobolev_norm

CHECKPOINT_VERSION = 1
_SNAP = 1e-9


@dataclass
class RunResult:
    params: ParamSet
    records: list
    states: list | None = None
    termination: str = "completed"
    message: str = ""
    steps: int = 0
    wall_time: float = 0.0
    files: list = field(default_factory=list)
    final_state: object = None

    @property
    def ok(self) -> bool:
        return self.termination == "completed"

    def gronwall(self):
        if len(self.records) < 2:
            return None
        return diagnostics.gronwall_envelope(self.records, self.params.epsilon,
                                             self.params.gronwall_fit_fraction)

    def threshold(self):
        if not self.records:
            return None
        p = self.params
        return diagnostics.threshold_monitor(self.records, p.supercritical, p.threshold, p.eps1)

    def summary(self) -> dict:
        g = self.gronwall()
        out = {
            "termination": self.termination,
            "message": self.message,
            "steps": self.steps,
            "t_final": self.records[-1].t if self.records else 0.0,
            "wall_time": self.wall_time,
            "max_energy_residual": _nanmax([r.energy_residual for r in self.records]),
            "gronwall": None if g is None else g.summary(),
            "threshold": self.threshold(),
        }
        for name in diagnostics.ALL_RATIOS:
            out[f"max_{name}"] = _nanmax([getattr(r, name) for r in self.records])
        return out


def _nanmax(vals):
    arr = np.array(vals, dtype=float)
    return None if arr.size == 0 or np.all(np.isnan(arr)) else float(np.nanmax(arr))


def _targets(params: ParamSet):
    """Sample times, with checkpoint times merged in; ``t_end`` always included."""
    T = params.t_end
    n = int(math.floor(T / params.sample_dt + 1e-9))
    samples = [k * params.sample_dt for k in range(n + 1)]
    if T - samples[-1] > _SNAP * max(1.0, T):
        samples.append(T)
    else:
        samples[-1] = T
    ckpts = []
    if params.checkpoint_dt > 0:
        m = int(math.floor(T / params.checkpoint_dt + 1e-9))
        ckpts = [k * params.checkpoint_dt for k in range(1, m + 1)]
    merged = sorted(set(samples) | set(ckpts))
    return merged, set(samples), set(ckpts)


def _march(state, target, params, backend):
    """Step from ``state`` to exactly ``target``."""
    while target - state.t > _SNAP * max(1.0, target):
        h = min(params.dt, target - state.t)
        state = solver.advance(state, h, backend)
        if abs(state.t - target) <= _SNAP * max(1.0, target):
            state = _with_time(state, target)
    return _with_time(state, target)


def _with_time(state, t):
    from dataclasses import replace

    return replace(state, t=t)


def decomposed_view(state, params: ParamSet) -> solver.SolverState:
    """Decomposed state for diagnostics; a full state is split against the exact background."""
    if isinstance(state, solver.SolverState):
        return state
    rho0 = solver.background_at(params, state.t)
    rho1 = state.rho - solver.broadcast_background(rho0, state.grid)
    return solver.SolverState(state.t, rho1, rho0, params, state.step)


def run(params: ParamSet, out_dir=None, keep_states=False, backend=None,
        diagnostics_on=True, progress=None) -> RunResult:
    """Integrate to ``t_end`` in the mode named by ``params.mode``.

    A record is taken at every multiple of ``sample_dt``.  Aborts are not
    raised; they end the run with ``termination`` set to the abort reason.
    """
    if params.mode == "full":
        state = solver.initial_full_state(params)
    else:
        state = solver.initial_state(params)
    return _run_from(state, params, out_dir, keep_states, backend, diagnostics_on, progress)


def run_full(params: ParamSet, **kw) -> RunResult:
    return run(params.replace(mode="full"), **kw)


def resume(path, out_dir=None, **kw) -> RunResult:
    state = load_checkpoint(path)
    return _run_from(state, state.params, out_dir, **kw)


def _run_from(state, params, out_dir=None, keep_states=False, backend=None,
              diagnostics_on=True, progress=None) -> RunResult:
    t0 = time.perf_counter()
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    targets, samples, ckpts = _targets(params)
    result = RunResult(params, [], [] if keep_states else None)
    probe = params.energy_probe_dt if diagnostics_on else 0.0

    def sample(st):
        if diagnostics_on:
            result.records.append(diagnostics.compute_record(
                decomposed_view(st, params), probe, backend))
        if keep_states:
            result.states.append(st)
        if progress is not None:
            progress(st)

    try:
        for tgt in targets:
            if tgt < state.t - _SNAP * max(1.0, tgt):
                continue
            state = _march(state, tgt, params, backend)
            if tgt in samples:
                sample(state)
            if out is not None and tgt in ckpts:
                result.files += save_checkpoint(state, out / ("checkpoint_t" + f"{tgt:.6f}".replace(".", "p")))
    except solver.SolverAbort as exc:
        result.termination = exc.reason
        result.message = str(exc)
    result.final_state = state
    result.steps = state.step
    if out is not None:
        if diagnostics_on:
            result.files.append(diagnostics.write_csv(result.records, out / "diagnostics.csv"))
        if result.ok:
            result.files += save_checkpoint(state, out / "final")
    result.wall_time = time.perf_counter() - t0
    return result


# ---------------------------------------------------------------- checkpoints


def save_checkpoint(state, stem) -> list[Path]:
    """Write ``<stem>.bin`` (little-endian complex128 spectra) and ``<stem>.json``.

    The binary holds the named arrays back to back in C order; the sidecar
    records their shapes, offsets, the grid, the time and the parameters.
    """
    stem = Path(stem)
    if isinstance(state, solver.FullState):
        arrays = [("rho", state.rho.data)]
    else:
        arrays = [("rho1", state.rho1.data)]
        if state.rho0 is not None:
            arrays.append(("rho0", state.rho0.data))
    meta, offset = [], 0
    with stem.with_suffix(".bin").open("wb") as fh:
        for name, a in arrays:
            buf = np.ascontiguousarray(a, dtype="<c16").tobytes()
            fh.write(buf)
            meta.append({"name": name, "shape": list(a.shape), "offset": offset})
            offset += len(buf)
    g = state.grid
    side = {
        "version": CHECKPOINT_VERSION,
        "dtype": "<c16",
        "layout": "rfft2 ortho, last axis halved",
        "kind": "full" if isinstance(state, solver.FullState) else "decomposed",
        "t": state.t,
        "step": state.step,
        "grid": {"n1": g.n1, "n2": g.n2, "L1": g.L1, "L2": g.L2},
        "arrays": meta,
        "params": state.params.as_dict(),
    }
    stem.with_suffix(".json").write_text(json.dumps(side, indent=2))
    return [stem.with_suffix(".bin"), stem.with_suffix(".json")]


def load_checkpoint(path):
    """Inverse of :func:`save_checkpoint`; ``path`` may be either file or the stem."""
    stem = Path(path).with_suffix("")
    side = json.loads(stem.with_suffix(".json").read_text())
    if side.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {side.get('version')}")
    raw = stem.with_suffix(".bin").read_bytes()
    arrays = {}
    for m in side["arrays"]:
        count = int(np.prod(m["shape"]))
        a = np.frombuffer(raw, dtype=side["dtype"], count=count, offset=m["offset"])
        arrays[m["name"]] = a.astype(complex).reshape(m["shape"])
    gd = side["grid"]
    grid = Grid2D(gd["n1"], gd["n2"], gd["L1"], gd["L2"])
    params = params_from_dict(side["params"])
    if side["kind"] == "full":
        return solver.FullState(side["t"], SpecField(grid, arrays["rho"]), params, side["step"])
    rho0 = arrays.get("rho0")
    rho0 = None if rho0 is None else SpecField(Grid1D(gd["n2"], gd["L2"]), rho0)
    return solver.SolverState(side["t"], SpecField(grid, arrays["rho1"]), rho0, params,
                              side["step"])


# ---------------------------------------------------------------- comparisons


def state_difference(a, b, s=None) -> float:
    """``||rho_a - rho_b||_{H^s}`` of the total densities on a shared grid."""
    ra, rb = solver.total_density(a), solver.total_density(b)
    if ra.grid != rb.grid:
        raise ValueError("states live on different grids")
    s = a.params.s if s is None else s
    return sobolev_norm(ra - rb, s)


def compare_runs(a: RunResult, b: RunResult, s=None) -> list[tuple[float, float]]:
    """Per-sample ``(t, ||rho_a - rho_b||_{H^s})`` for two runs that kept states."""
    if a.states is None or b.states is None:
        raise ValueError("both runs must keep their states")
    out = []
    for sa, sb in zip(a.states, b.states):
        if abs(sa.t - sb.t) > 1e-9 * max(1.0, sa.t):
            raise ValueError(f"sample times differ: {sa.t} vs {sb.t}")
        out.append((sa.t, state_difference(sa, sb, s)))
    return out


def self_convergence(params: ParamSet, dts, backend=None, s=None) -> dict:
    """Final-time states at each ``dt`` and successive-difference ratios.

    With ``dts = (h, h/2, h/4)`` a fourth-order scheme gives
    ``||u_h - u_{h/2}|| / ||u_{h/2} - u_{h/4}|| ~ 16``.
    """
    finals = []
    for dt in dts:
        p = params.replace(dt=dt, sample_dt=params.t_end)
        res = run(p, backend=backend, diagnostics_on=False)
        if not res.ok:
            raise solver.SolverAbort(f"run at dt={dt} ended with {res.termination}")
        finals.append(res.final_state)
    diffs = [state_difference(finals[i], finals[i + 1], s) for i in range(len(finals) - 1)]
    ratios = [diffs[i] / diffs[i + 1] if diffs[i + 1] > 0 else math.inf
              for i in range(len(diffs) - 1)]
    return {"dts": list(dts), "differences": diffs, "ratios": ratios}
