"""Monitored quantities of the a priori estimates.

A :class:`DiagnosticsRecord` collects, at one instant, the perturbation
norms, the background norms, the three transport integrals

    I1 = int rho1 u.grad rho0
    I2 = int Lambda^s rho1 Lambda^s (u.grad rho0)
    I3 = int Lambda^s rho1 Lambda^s (u.grad rho1)

and the ratios of each bound's left side to its right side.  Background
norms are taken of the dealiased background, i.e. the one the dynamics sees.
All integrals reuse the solver's dealiased products, so the energy balance
closes up to time-differencing error.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from . import solver
from .spectral import (
    SpecField,
    dealias,
    derivative,
    frac_laplacian,
    lp_norm,
    power_symbol,
    spectral_energy,
    sup_norm,
)

DELTA = 0.25
RATIO_FLOOR = 1e-14
NA = float("nan")

SUPERCRITICAL_RATIOS = ("cross_diss", "cross_holder", "self_super", "mixed_super", "mixed_sub")
SUBCRITICAL_RATIOS = ("cross_holder", "self_sub", "mixed_sub")
ALL_RATIOS = ("cross_diss", "cross_holder", "self_super", "self_sub", "mixed_super", "mixed_sub")


@dataclass
class DiagnosticsRecord:
    """One sample of the monitored quantities.

    Ratios (``nan`` when not applicable), with ``D0 = grad rho0``:

    - ``cross_diss``   ``|I1| / (||Lambda^{a/2} rho1||^2 ||D0||_{1/a})``
    - ``cross_holder`` ``|I1| / (||rho1||^2 ||D0||_inf)``, at most 1
    - ``self_super``   ``|I3| / (||Lambda^s rho1|| ||Lambda^{s+a/2} rho1||^2)``
    - ``self_sub``     ``|I3| / (||Lambda^s rho1|| (||Lambda^{a/2} rho1||^2 + ||Lambda^{s+a/2} rho1||^2))``
    - ``mixed_super``  ``|I2| / (||Lambda^{s+a/2} rho1||^2 ||D0||_{1/a}
      + ||Lambda^{s+a/2} rho1|| ||Lambda^{a/2} rho1|| ||Lambda^s D0||_{1/a})``
    - ``mixed_sub``    ``|I2| / (||Lambda^{s+a/2} rho1|| ||u||_{H^s}
      (||D0||_inf + ||Lambda^{s-a/2} D0||_p))``
    """

    t: float
    rho1_l2: float
    rho1_half_alpha: float
    rho1_s: float
    rho1_s_half_alpha: float
    rho1_hs: float
    u_hs: float
    grad_rho0_inf: float
    grad_rho0_inv_alpha: float
    grad_frac_s_rho0_inv_alpha: float
    grad_frac_s_half_rho0_p: float
    I1: float
    I2: float
    I3: float
    cross_diss: float = NA
    cross_holder: float = NA
    self_super: float = NA
    self_sub: float = NA
    mixed_super: float = NA
    mixed_sub: float = NA
    energy_residual: float = NA

    @classmethod
    def columns(cls):
        return [f.name for f in fields(cls)]

    def row(self):
        return [f"{v:.17g}" for v in asdict(self).values()]

    @property
    def energy(self) -> float:
        return 0.5 * self.rho1_hs**2

    @property
    def dissipation(self) -> float:
        return self.rho1_half_alpha**2 + self.rho1_s_half_alpha**2


def write_csv(records, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DiagnosticsRecord.columns())
        for r in records:
            w.writerow(r.row())
    return path


def read_csv(path) -> list[DiagnosticsRecord]:
    with Path(path).open() as fh:
        rows = list(csv.DictReader(fh))
    return [DiagnosticsRecord(**{k: float(v) for k, v in row.items()}) for row in rows]


# ---------------------------------------------------------------- building blocks


def _ratio(num, den):
    return abs(num) / den if den > RATIO_FLOOR else NA


def _weighted_inner(grid, a, b, sym=None):
    prod = (a.conj() * b).real
    if sym is not None:
        prod = prod * sym
    return float(grid.cell_area * np.sum(grid.spec_weights * prod))


def background_norms(rho0: SpecField | None, alpha, s, p, fraction=2 / 3) -> dict:
    """Norms of the dealiased background appearing in the estimates."""
    keys = ("grad_rho0_inf", "grad_rho0_inv_alpha", "grad_frac_s_rho0_inv_alpha",
            "grad_frac_s_half_rho0_p")
    if rho0 is None:
        return dict.fromkeys(keys, 0.0)
    r0 = dealias(rho0, fraction)
    d = derivative(r0, 1)
    out = {"grad_rho0_inf": sup_norm(d)}
    if alpha < 1:
        # L^{1/alpha} needs 1/alpha >= 1
        out["grad_rho0_inv_alpha"] = lp_norm(d, 1 / alpha)
        out["grad_frac_s_rho0_inv_alpha"] = lp_norm(frac_laplacian(d, s), 1 / alpha)
    else:
        out["grad_rho0_inv_alpha"] = NA
        out["grad_frac_s_rho0_inv_alpha"] = NA
    out["grad_frac_s_half_rho0_p"] = lp_norm(frac_laplacian(d, s - alpha / 2), p)
    return out


def transport_integrals(state: solver.SolverState, backend=None) -> tuple[float, float, float]:
    """``(I1, I2, I3)`` from the solver's dealiased products."""
    p = state.params
    ws = solver.workspace(state.grid, p.alpha, p.dealias, backend)
    r1 = state.rho1.data
    dr0 = ws.background_gradient(None if state.rho0 is None else state.rho0.data)
    self_adv, cross = ws.split_tendency(r1, dr0)
    g = state.grid
    s2 = power_symbol(g, 2 * p.s)
    I1 = _weighted_inner(g, r1, cross)
    I2 = _weighted_inner(g, r1, cross, s2)
    I3 = _weighted_inner(g, r1, self_adv, s2)
    return I1, I2, I3


def _advect_by(ws, rho_hat, f_hat):
    """Dealiased ``u(rho) . grad f`` as a spectrum."""
    u1, u2, _, _ = ws.fields(rho_hat)
    _, _, d1, d2 = ws.fields(f_hat)
    return sfft.rfft2(u1 * d1 + u2 * d2, norm="ortho") * ws.mask


def transport_cancellation(state: solver.SolverState, backend=None) -> float:
    """``int Lambda^s rho1 (u . grad Lambda^s rho1)``; zero for divergence-free ``u``."""
    p = state.params
    ws = solver.workspace(state.grid, p.alpha, p.dealias, backend)
    g = state.grid
    f = state.rho1.data * power_symbol(g, p.s) * ws.mask
    return _weighted_inner(g, f, _advect_by(ws, state.rho1.data, f))


def commutator_I3(state: solver.SolverState, backend=None) -> float:
    """``I3`` in commutator form ``int Lambda^s rho1 [Lambda^s, u . grad] rho1``."""
    p = state.params
    ws = solver.workspace(state.grid, p.alpha, p.dealias, backend)
    g = state.grid
    ls = power_symbol(g, p.s)
    r = state.rho1.data
    full = _advect_by(ws, r, r) * ls
    inner = _advect_by(ws, r, r * ls * ws.mask)
    return _weighted_inner(g, r * ls, full - inner)


def velocity_hs(rho1: SpecField, s) -> float:
    u1, u2 = solver.compute_velocity(rho1)
    g = rho1.grid
    ps = power_symbol(g, s) ** 2
    return math.sqrt(sum(spectral_energy(g, u.data) + spectral_energy(g, u.data, ps)
                         for u in (u1, u2)))


def compute_record(state: solver.SolverState, energy_probe_dt=0.0, backend=None) -> DiagnosticsRecord:
    p = state.params
    g = state.grid
    a, s = p.alpha, p.s
    d = state.rho1.data

    def hom(gamma):
        return math.sqrt(spectral_energy(g, d, power_symbol(g, gamma) ** 2))

    l2 = math.sqrt(spectral_energy(g, d))
    n_ha, n_s, n_sha = hom(a / 2), hom(s), hom(s + a / 2)
    I1, I2, I3 = transport_integrals(state, backend)
    rec = DiagnosticsRecord(
        t=state.t, rho1_l2=l2, rho1_half_alpha=n_ha, rho1_s=n_s, rho1_s_half_alpha=n_sha,
        rho1_hs=math.hypot(l2, n_s), u_hs=velocity_hs(state.rho1, s),
        I1=I1, I2=I2, I3=I3,
        **background_norms(state.rho0, a, s, p.p, p.dealias),
    )
    for name, val in _ratios(rec, p).items():
        setattr(rec, name, val)
    if energy_probe_dt > 0:
        rec.energy_residual = energy_balance(state, energy_probe_dt, backend, record=rec)
    return rec


def _ratios(rec: DiagnosticsRecord, params, which=None) -> dict:
    a = params.alpha
    if which is None:
        which = SUPERCRITICAL_RATIOS if a < 1 else SUBCRITICAL_RATIOS
    elif which == "all":
        which = ALL_RATIOS
    out = {}
    for name in which:
        if name == "cross_diss":
            den = rec.rho1_half_alpha**2 * rec.grad_rho0_inv_alpha
            out[name] = _ratio(rec.I1, den) if a < 1 else NA
        elif name == "cross_holder":
            out[name] = _ratio(rec.I1, rec.rho1_l2**2 * rec.grad_rho0_inf)
        elif name == "self_super":
            out[name] = _ratio(rec.I3, rec.rho1_s * rec.rho1_s_half_alpha**2)
        elif name == "self_sub":
            out[name] = _ratio(rec.I3, rec.rho1_s * (rec.rho1_half_alpha**2
                                                      + rec.rho1_s_half_alpha**2))
        elif name == "mixed_super":
            den = (rec.rho1_s_half_alpha**2 * rec.grad_rho0_inv_alpha
                   + rec.rho1_s_half_alpha * rec.rho1_half_alpha
                   * rec.grad_frac_s_rho0_inv_alpha)
            out[name] = _ratio(rec.I2, den) if a < 1 else NA
        elif name == "mixed_sub":
            den = rec.rho1_s_half_alpha * rec.u_hs * (rec.grad_rho0_inf
                                                       + rec.grad_frac_s_half_rho0_p)
            out[name] = _ratio(rec.I2, den)
        else:
            raise ValueError(f"unknown ratio {name!r}")
    return out


def inequality_ratios(state: solver.SolverState, which=None, backend=None) -> dict:
    """Left/right ratios of the bounds on ``I1, I2, I3``.

    ``which`` defaults to the regime's subset plus the two bounds valid for
    every ``alpha`` (``cross_holder``, ``mixed_sub``); pass ``"all"`` or an
    explicit tuple to override.  Degenerate denominators give ``nan``.
    """
    rec = compute_record(state, backend=backend)
    return _ratios(rec, state.params, which)


# ---------------------------------------------------------------- energy balance


def energy_terms(state, backend=None) -> dict:
    rec = compute_record(state, backend=backend)
    return {"energy": rec.energy, "dissipation": rec.dissipation,
            "I1": rec.I1, "I2": rec.I2, "I3": rec.I3}


def _energy(state) -> float:
    g = state.grid
    d = state.rho1.data
    return 0.5 * (spectral_energy(g, d) + spectral_energy(g, d, power_symbol(g, 2 * state.params.s)))


def energy_balance(state, dt_probe, backend=None, record=None) -> float:
    """Residual of the energy identity at ``state.t``.

    ``|dE/dt + dissipation + I1 + I2 + I3|`` with ``E = ||rho1||_{H^s}^2 / 2``
    and ``dE/dt`` a centred difference from one step of ``-dt_probe`` and one
    of ``+dt_probe``.
    """
    if not dt_probe > 0:
        raise ValueError(f"dt_probe must be positive, got {dt_probe}")
    rec = record or compute_record(state, backend=backend)
    e_plus = _energy(solver.step(state, dt_probe, backend))
    e_minus = _energy(solver.step(state, -dt_probe, backend))
    dE = (e_plus - e_minus) / (2 * dt_probe)
    return abs(dE + rec.dissipation + rec.I1 + rec.I2 + rec.I3)


# ---------------------------------------------------------------- Gronwall envelope


def _cumtrapz(y, t):
    out = np.zeros_like(y)
    if len(y) > 1:
        out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


@dataclass
class GronwallResult:
    times: np.ndarray
    measured: np.ndarray
    envelope: np.ndarray
    c_delta: float
    violated: bool
    first_violation: float | None
    integral: float
    integrand_tail_slope: float

    def summary(self) -> dict:
        return {
            "c_delta": self.c_delta,
            "delta": DELTA,
            "violated": self.violated,
            "first_violation": self.first_violation,
            "integral": self.integral,
            "integrand_tail_slope": self.integrand_tail_slope,
            "integral_converging": bool(self.integrand_tail_slope < -1),
        }


def gronwall_envelope(records, eps_initial=None, fit_fraction=0.1) -> GronwallResult:
    """Envelope ``||g||_{H^s} exp(int_0^t [a + C_delta b] ds)`` over a record series.

    ``a = ||grad rho0||_inf`` and ``b = (||grad rho0||_inf +
    ||grad Lambda^{s-alpha/2} rho0||_p)^2``.  ``C_delta`` is the smallest
    non-negative constant keeping the envelope above the measured norm on the
    first ``fit_fraction`` of the samples; later samples are checked against it.
    """
    t = np.array([r.t for r in records])
    m = np.array([r.rho1_hs for r in records])
    a = np.array([r.grad_rho0_inf for r in records])
    b = (a + np.array([r.grad_frac_s_half_rho0_p for r in records])) ** 2
    eps0 = m[0] if eps_initial is None else eps_initial
    IA, IB = _cumtrapz(a, t), _cumtrapz(b, t)

    n_fit = max(2, int(math.ceil(fit_fraction * len(t))))
    c = 0.0
    if eps0 > 0:
        for i in range(min(n_fit, len(t))):
            if IB[i] > 0 and m[i] > 0:
                c = max(c, (math.log(m[i] / eps0) - IA[i]) / IB[i])
    env = eps0 * np.exp(IA + c * IB)
    over = m > env * (1 + 1e-12)
    first = float(t[np.argmax(over)]) if over.any() else None

    integrand = a + c * b
    half = len(t) // 2
    tail_t, tail_y = t[half:], integrand[half:]
    ok = (tail_t > 0) & (tail_y > 0)
    if ok.sum() >= 2:
        slope = float(np.polyfit(np.log(tail_t[ok]), np.log(tail_y[ok]), 1)[0])
    else:
        slope = NA
    return GronwallResult(t, m, env, float(c), bool(over.any()), first,
                          float(IA[-1] + c * IB[-1]), slope)


# ---------------------------------------------------------------- thresholds


def background_smallness(rec: DiagnosticsRecord, supercritical: bool) -> float:
    """Background part of the smallness condition.

    Supercritical: ``||grad rho0||_{1/alpha} + ||grad Lambda^s rho0||_{1/alpha}``.
    Subcritical (where ``L^{1/alpha}`` is not a norm): ``||grad rho0||_inf +
    ||grad Lambda^{s-alpha/2} rho0||_p``, the background factor of the
    Gronwall integrand.
    """
    if supercritical:
        return rec.grad_rho0_inv_alpha + rec.grad_frac_s_rho0_inv_alpha
    return rec.grad_rho0_inf + rec.grad_frac_s_half_rho0_p


def threshold_monitor(records, supercritical: bool, threshold=None, eps1=None,
                      rel_threshold=0.1) -> dict:
    """Empirical ``t1`` and post-``t1`` monotonicity of ``||rho1||_{H^s}``.

    ``t1`` is the first sample time at which the background smallness drops
    to ``threshold`` (default ``rel_threshold`` times its initial value).
    """
    t = np.array([r.t for r in records])
    S = np.array([background_smallness(r, supercritical) for r in records])
    m = np.array([r.rho1_hs for r in records])
    if threshold is None:
        threshold = rel_threshold * S[0]
    below = S <= threshold
    if S[0] == 0 or below[0]:
        i1 = 0
    elif below.any():
        i1 = int(np.argmax(below))
    else:
        i1 = None
    report = {"threshold": float(threshold), "t1": None if i1 is None else float(t[i1]),
              "stays_below": None, "monotone_after_t1": None,
              "max_increase_after_t1": None, "eps1": eps1, "eps1_margin": None}
    if i1 is not None:
        report["stays_below"] = bool(below[i1:].all())
        tail = m[i1:]
        inc = np.diff(tail)
        tol = 1e-12 * np.maximum(tail[:-1], 1e-300)
        report["monotone_after_t1"] = bool(np.all(inc <= tol))
        report["max_increase_after_t1"] = float(inc.max()) if inc.size else 0.0
    if eps1 is not None:
        report["eps1_margin"] = float(eps1 - max(r.rho1_s for r in records))
    return report
