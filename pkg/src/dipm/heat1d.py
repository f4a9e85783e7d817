"""Exact 1-D fractional heat semigroup, background profiles and decay scans."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .spectral import (
    Field,
    Grid1D,
    SpecField,
    derivative,
    frac_laplacian,
    lp_norm,
    power_symbol,
    transform,
)

PROFILE_KINDS = ("gaussian", "derivative-gaussian", "periodic-bump", "cosine-packet")


@dataclass(frozen=True)
class Profile:
    """A smooth 1-D background profile ``f(x2)`` centred in the period."""

    kind: str = "gaussian"
    width: float = 1.0
    amplitude: float = 1.0
    k: float = 0.0
    center: float | None = None

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise ValueError(f"unknown profile kind {self.kind!r}; expected one of {PROFILE_KINDS}")
        if not self.width > 0:
            raise ValueError(f"profile width must be positive, got {self.width}")

    def _center(self, grid):
        return grid.L / 2 if self.center is None else self.center

    def sample(self, grid: Grid1D) -> np.ndarray:
        x = grid.x - self._center(grid)
        w = self.width
        if self.kind == "periodic-bump":
            # Gaussian in the chordal distance, exactly periodic
            d = (grid.L / np.pi) * np.sin(np.pi * x / grid.L)
            return self.amplitude * np.exp(-(d**2) / (2 * w**2))
        gauss = np.exp(-(x**2) / (2 * w**2))
        if self.kind == "gaussian":
            return self.amplitude * gauss
        if self.kind == "derivative-gaussian":
            return self.amplitude * (-x / w) * gauss
        return self.amplitude * np.cos(self.k * x) * gauss

    def field(self, grid: Grid1D) -> Field:
        return Field(grid, self.sample(grid))

    def spectrum(self, grid: Grid1D) -> SpecField:
        return transform(self.field(grid))

    def tail_fraction(self, grid: Grid1D) -> float:
        """Share of ``int |f|`` lying farther than ``L/4`` from the centre."""
        f = np.abs(self.sample(grid))
        x = grid.x - self._center(grid)
        dist = np.abs((x + grid.L / 2) % grid.L - grid.L / 2)
        total = f.sum()
        return float(f[dist > grid.L / 4].sum() / total) if total > 0 else 0.0


def heat_symbol(grid: Grid1D, alpha: float, t: float) -> np.ndarray:
    """``exp(-t |xi|^alpha)`` on the spectral layout of ``grid``."""
    return np.exp(-t * power_symbol(grid, alpha))


def heat_propagate(f: SpecField, alpha: float, t: float) -> SpecField:
    """Apply ``K_alpha(t) = exp(-t Lambda^alpha)`` exactly."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if not 0 < alpha <= 2:
        raise ValueError(f"alpha must lie in (0, 2], got {alpha}")
    if t == 0:
        return f.copy()
    return SpecField(f.grid, f.data * heat_symbol(f.grid, alpha, t))


def background_tendency(rho0: SpecField, alpha: float) -> SpecField:
    """``-Lambda^alpha rho0``, the right-hand side of the background equation."""
    return -frac_laplacian(rho0, alpha)


# ---------------------------------------------------------------- decay scans


def heat_decay_exponent(alpha: float, order: float, q: float, r: float) -> float:
    """Exponent of ``t`` in ``||D^order K(t) h||_r <~ t^e ||h||_q``."""
    inv_r = 0.0 if r == np.inf else 1.0 / r
    return -order / alpha - (1.0 / alpha) * (1.0 / q - inv_r)


@dataclass(frozen=True)
class NormSpec:
    """Which norm of the background a scan measures.

    ``kind="lp"`` measures ``||d_x^derivs Lambda^frac rho0||_{L^r}``;
    ``kind="mean"`` measures the magnitude of the spatial mean.
    """

    kind: str = "lp"
    derivs: int = 1
    frac: float = 0.0
    r: float = 2.0

    def __post_init__(self):
        if self.kind not in ("lp", "mean"):
            raise ValueError(f"norm kind must be 'lp' or 'mean', got {self.kind!r}")
        if self.kind == "lp" and not self.r >= 1:
            raise ValueError(f"Lp norm requires r >= 1, got {self.r}")

    @property
    def label(self) -> str:
        if self.kind == "mean":
            return "mean"
        op = "d" * self.derivs + (f"L^{self.frac:g}" if self.frac else "")
        return f"{op or 'id'}|L{self.r:g}"

    def apply(self, rho0: SpecField) -> SpecField:
        out = rho0
        if self.frac:
            out = frac_laplacian(out, self.frac)
        for _ in range(self.derivs):
            out = derivative(out, 1)
        return out

    def evaluate(self, rho0: SpecField) -> float:
        if self.kind == "mean":
            g = rho0.grid
            return float(abs(rho0.data[0].real) / math.sqrt(g.n))
        return lp_norm(self.apply(rho0), self.r)

    def self_similar_exponent(self, alpha: float) -> float:
        """Decay rate of data with nonzero integral (width ~ t^(1/alpha))."""
        if self.kind == "mean":
            return 0.0
        return heat_decay_exponent(alpha, self.derivs + self.frac, 1.0, self.r)

    def theory_exponent(self, alpha: float, q: float, data: str = "f") -> float:
        """Exponent of the ``L^q -> L^r`` bound.

        With ``data="grad_f"`` one derivative is carried by the data, as in
        the bound for ``||d rho0||`` in terms of ``||d f||_{L^q}``.
        """
        if self.kind == "mean":
            return 0.0
        order = self.derivs + self.frac - (1 if data == "grad_f" else 0)
        return heat_decay_exponent(alpha, order, q, self.r)


def _fit_slope(t, v):
    A = np.vstack([np.log(t), np.ones_like(t)]).T
    coef, *_ = np.linalg.lstsq(A, np.log(v), rcond=None)
    return float(coef[0])


@dataclass
class DecayScan:
    alpha: float
    norm: NormSpec
    times: np.ndarray
    values: np.ndarray
    valid: np.ndarray
    conclusive: bool
    slope: float
    fit_window: tuple[int, int]
    self_similar_exponent: float
    q: float
    data: str
    theory_exponent: float
    envelope_constant: float
    envelope: np.ndarray
    envelope_ok: bool
    young_envelope: np.ndarray = field(default=None)
    young_ok: bool | None = None

    def relative_slope_error(self) -> float:
        ref = self.self_similar_exponent
        return abs(self.slope - ref) / abs(ref) if ref else abs(self.slope)

    def summary(self) -> dict:
        return {
            "alpha": self.alpha,
            "norm": self.norm.label,
            "slope": self.slope,
            "self_similar_exponent": self.self_similar_exponent,
            "relative_slope_error": self.relative_slope_error(),
            "q": self.q,
            "data_norm": self.data,
            "theory_exponent": self.theory_exponent,
            "envelope_constant": self.envelope_constant,
            "envelope_ok": self.envelope_ok,
            "young_ok": self.young_ok,
            "validity": bool(self.conclusive),
            "conclusive": bool(self.conclusive),
            "fit_window": [float(self.times[self.fit_window[0]]),
                           float(self.times[self.fit_window[1] - 1])],
            "n_valid": int(self.valid.sum()),
        }

    def write_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "value", "envelope", "valid"])
            for t, v, e, ok in zip(self.times, self.values, self.envelope, self.valid):
                w.writerow([f"{t:.17g}", f"{v:.17g}", f"{e:.17g}", int(ok)])
        return path

    def write_json(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n")
        return path


def _young_envelope(f: SpecField, alpha, norm: NormSpec, times, q, data):
    """``||D K(t)||_{L^s} ||h||_{L^q}`` with ``1 + 1/r = 1/s + 1/q`` (Young)."""
    g = f.grid
    inv_r = 0.0 if norm.r == np.inf else 1.0 / norm.r
    inv_s = 1.0 + inv_r - 1.0 / q
    if not 0 <= inv_s <= 1:
        return None
    s = np.inf if inv_s == 0 else 1.0 / inv_s
    h = derivative(f, 1) if data == "grad_f" else f
    kern_norm = NormSpec("lp", norm.derivs - (1 if data == "grad_f" else 0), norm.frac, s)
    h_norm = lp_norm(h, q)
    # periodic kernel: unit-mass delta spectrum is 1/sqrt(n) per mode times 1/dx
    delta = SpecField(g, np.full(g.spec_shape, 1.0 / (math.sqrt(g.n) * g.dx[0]), dtype=complex))
    return np.array([kern_norm.evaluate(heat_propagate(delta, alpha, t)) * h_norm
                     for t in times])


def decay_scan(
    profile: Profile,
    alpha: float,
    norm: NormSpec,
    times,
    grid: Grid1D,
    q: float = 1.0,
    data: str = "f",
    young: bool = False,
) -> DecayScan:
    """Measure a background norm along ``K_alpha(t) f`` and fit its decay.

    A time is valid while the spreading width ``t^(1/alpha)`` is at most
    ``L/10``; the scan is conclusive only if the final time is valid.  The
    slope is a least-squares fit of ``log value`` against ``log t`` over the
    last half of the valid times.  The envelope ``C t^theory_exponent`` takes
    ``C`` from the first valid time.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2:
        raise ValueError("need at least two scan times")
    if np.any(times <= 0) or np.any(np.diff(times) <= 0):
        raise ValueError("scan times must be positive and strictly increasing")
    if not 0 < alpha <= 2:
        raise ValueError(f"alpha must lie in (0, 2], got {alpha}")

    f = profile.spectrum(grid)
    values = np.array([norm.evaluate(heat_propagate(f, alpha, t)) for t in times])
    valid = times ** (1.0 / alpha) <= grid.L / 10 * (1 + 1e-9)
    conclusive = bool(valid[-1])

    idx = np.flatnonzero(valid)
    ss = norm.self_similar_exponent(alpha)
    th = norm.theory_exponent(alpha, q, data)
    if idx.size >= 2:
        start = idx[idx.size // 2] if idx.size >= 4 else idx[0]
        window = (int(start), int(idx[-1]) + 1)
        tw, vw = times[window[0]:window[1]], values[window[0]:window[1]]
        positive = vw > 0
        slope = _fit_slope(tw[positive], vw[positive]) if positive.sum() >= 2 else float("nan")
        i0 = idx[0]
        C = values[i0] / times[i0] ** th
    else:
        window = (0, 0)
        slope = float("nan")
        C = float("nan")
    envelope = C * times**th
    checked = valid & np.isfinite(envelope)
    envelope_ok = bool(np.all(values[checked] <= envelope[checked] * (1 + 1e-12)))

    young_env, young_ok = None, None
    if young:
        young_env = _young_envelope(f, alpha, norm, times, q, data)
        if young_env is not None:
            young_ok = bool(np.all(values <= young_env * (1 + 1e-10)))

    return DecayScan(
        alpha=alpha, norm=norm, times=times, values=values, valid=valid,
        conclusive=conclusive, slope=slope, fit_window=window,
        self_similar_exponent=ss, q=q, data=data, theory_exponent=th,
        envelope_constant=float(C), envelope=envelope, envelope_ok=envelope_ok,
        young_envelope=young_env, young_ok=young_ok,
    )
