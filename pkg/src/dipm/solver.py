"""Time integration of dissipative IPM in full and background/perturbation form.

The linear dissipation ``-Lambda^alpha`` is diagonal in Fourier space and is
integrated exactly (integrating factor); the transport term is advanced with
classical RK4 on the transformed variable (Lawson RK4).  Products are formed
in real space between 2/3-dealiased factors and the result is dealiased.

In decomposed mode the background ``rho0(x2, t)`` is stored on the 1-D
``x2`` grid and advanced exactly by the fractional heat semigroup; it only
enters through ``u2 * d_x2 rho0``.  Velocity depends on ``rho1`` alone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from . import kernels
from .heat1d import Profile, heat_propagate, heat_symbol
from .params import ParamSet
from .spectral import Grid1D, Grid2D, SpecField, transform, Field

MAX_HALVINGS = 20


class SolverAbort(RuntimeError):
    """A run cannot continue; ``reason`` is recorded in the run manifest."""

    reason = "abort"


class BlowUp(SolverAbort):
    reason = "blow-up"


class ResolutionExhausted(SolverAbort):
    reason = "resolution exhausted"


class Workspace:
    """Cached symbols and scratch buffers for one (grid, alpha, dealias) triple.

    Not thread-safe: buffers are reused between calls.  Use one workspace per
    worker (see :func:`workspace`, which caches per process).
    """

    def __init__(self, grid: Grid2D, alpha: float, fraction: float, backend=None):
        self.grid = grid
        self.alpha = alpha
        self.fraction = fraction
        self.kern = kernels.get_backend(backend)
        self.mask = np.ascontiguousarray(grid.dealias_mask(fraction))
        self.k1 = np.ascontiguousarray(grid.k_odd(1).ravel())
        self.k2 = np.ascontiguousarray(grid.k_odd(2).ravel())
        ak2 = grid.abs_k**2
        self.inv_k2 = np.zeros(grid.spec_shape)
        np.divide(1.0, ak2, out=self.inv_k2, where=ak2 > 0)
        self.lin = np.ascontiguousarray(grid.abs_k**alpha)

        self.line = grid.line()
        self.line_mask = self.line.dealias_mask(fraction)
        self.line_dk = 1j * self.line.k_odd(1) * self.line_mask

        shp = grid.spec_shape
        self._spec = [np.empty(shp, dtype=complex) for _ in range(4)]
        self._real = [np.empty(grid.shape) for _ in range(5)]
        self._zero_line = np.zeros(grid.n2)
        self.ones = np.ones(shp)
        self._exp_cache = {}
        self.last_umax = 0.0

    # -- linear propagators

    def propagators(self, h):
        """``(exp(-h |xi|^alpha), exp(-h/2 |xi|^alpha))``, cached on ``h``."""
        hit = self._exp_cache.get(h)
        if hit is None:
            if len(self._exp_cache) > 8:
                self._exp_cache.clear()
            hit = (np.exp(-h * self.lin), np.exp(-0.5 * h * self.lin))
            self._exp_cache[h] = hit
        return hit

    # -- nonlinear pieces

    def background_gradient(self, rho0_hat):
        """Dealiased ``d_x2 rho0`` in real space (length ``n2``)."""
        if rho0_hat is None:
            return self._zero_line
        return sfft.irfft(rho0_hat * self.line_dk, n=self.grid.n2, norm="ortho")

    def fields(self, rho_hat):
        """Real-space ``u1, u2, d1 rho, d2 rho`` of the dealiased density."""
        u1h, u2h, d1h, d2h = self._spec
        self.kern.velocity_gradient_spectra(rho_hat, self.k1, self.k2, self.inv_k2,
                                            self.mask, u1h, u2h, d1h, d2h)
        s = self.grid.shape
        u1, u2, d1, d2 = (sfft.irfft2(a, s=s, norm="ortho") for a in self._spec)
        return u1, u2, d1, d2

    def tendency(self, rho_hat, dr0):
        """``-P[u . grad rho] - P[u2 d_x2 rho0]`` as a spectrum."""
        u1, u2, d1, d2 = self.fields(rho_hat)
        prod = self._real[4]
        self.last_umax = math.sqrt(self.kern.advect(u1, u2, d1, d2, dr0, prod))
        out = sfft.rfft2(prod, norm="ortho")
        out *= self.mask
        return out

    def split_tendency(self, rho_hat, dr0):
        """Transport and background parts separately: ``(P[u.grad rho], P[u2 dr0])``."""
        u1, u2, d1, d2 = self.fields(rho_hat)
        self_adv = sfft.rfft2(u1 * d1 + u2 * d2, norm="ortho") * self.mask
        cross = sfft.rfft2(u2 * dr0[None, :], norm="ortho") * self.mask
        return self_adv, cross


@lru_cache(maxsize=16)
def workspace(grid: Grid2D, alpha: float, fraction: float, backend=None) -> Workspace:
    return Workspace(grid, alpha, fraction, backend)


# ---------------------------------------------------------------- states


@dataclass(frozen=True, eq=False)
class SolverState:
    """Decomposed state ``rho = rho0(x2, t) + rho1(x1, x2, t)``."""

    t: float
    rho1: SpecField
    rho0: SpecField | None
    params: ParamSet
    step: int = 0

    @property
    def grid(self) -> Grid2D:
        return self.rho1.grid


@dataclass(frozen=True, eq=False)
class FullState:
    """Undecomposed state holding the total density ``rho``."""

    t: float
    rho: SpecField
    params: ParamSet
    step: int = 0

    @property
    def grid(self) -> Grid2D:
        return self.rho.grid


def _ws(state, backend=None):
    p = state.params
    return workspace(state.grid, p.alpha, p.dealias, backend)


# ---------------------------------------------------------------- initial data


def background_profile(params: ParamSet) -> Profile:
    return Profile(params.profile, params.profile_width, params.profile_amplitude)


def perturbation(params: ParamSet, grid: Grid2D | None = None) -> SpecField:
    """Initial perturbation ``g`` scaled to ``||g||_{H^s} = epsilon``.

    ``random``: seeded white noise filtered by ``exp(-(|xi| w)^2 / 2)``;
    ``bump``: ``exp(-|x - c|^2 / 2w^2) cos(x1 / w)`` centred in the box.
    The mean is removed and the result is dealiased.
    """
    from .spectral import dealias, sobolev_norm

    grid = grid or params.grid()
    if params.perturbation == "none" or params.epsilon == 0:
        return SpecField(grid, np.zeros(grid.spec_shape, dtype=complex))
    w = params.perturbation_width
    if params.perturbation == "random":
        rng = np.random.default_rng(params.seed)
        noise = rng.standard_normal(grid.shape)
        spec = transform(Field(grid, noise))
        spec = SpecField(grid, spec.data * np.exp(-0.5 * (grid.abs_k * w) ** 2))
    else:
        x1, x2 = grid.coords()
        r2 = (x1 - grid.L1 / 2) ** 2 + (x2 - grid.L2 / 2) ** 2
        spec = transform(Field(grid, np.exp(-r2 / (2 * w**2)) * np.cos((x1 - grid.L1 / 2) / w)))
    spec.data[0, 0] = 0.0
    spec = dealias(spec, params.dealias)
    norm = sobolev_norm(spec, params.s)
    if norm == 0:
        raise ValueError("perturbation has zero H^s norm on this grid")
    return spec * (params.epsilon / norm)


def initial_state(params: ParamSet) -> SolverState:
    grid = params.grid()
    rho0 = background_profile(params).spectrum(grid.line())
    return SolverState(0.0, perturbation(params, grid), rho0, params)


def initial_full_state(params: ParamSet) -> FullState:
    st = initial_state(params)
    return FullState(0.0, st.rho1 + broadcast_background(st.rho0, st.grid), params)


def broadcast_background(rho0: SpecField, grid: Grid2D) -> SpecField:
    """Embed an ``x2``-only spectrum into the 2-D layout (``k1 = 0`` row)."""
    out = np.zeros(grid.spec_shape, dtype=complex)
    # unitary scaling: a constant-in-x1 field gains sqrt(n1) in its k1 = 0 row
    out[0] = rho0.data * math.sqrt(grid.n1)
    return SpecField(grid, out)


# ---------------------------------------------------------------- operators


def compute_velocity(rho1: SpecField) -> tuple[SpecField, SpecField]:
    """``u = (-R1 R2 rho1, R1^2 rho1)``.

    Symbols ``xi1 xi2 / |xi|^2`` and ``-xi1^2 / |xi|^2`` (zero at the origin),
    built from odd-safe wavenumbers so the discrete divergence vanishes.
    """
    g = rho1.grid
    k1, k2 = g.k_odd(1), g.k_odd(2)
    ak2 = g.abs_k**2
    inv = np.zeros(g.spec_shape)
    np.divide(1.0, ak2, out=inv, where=ak2 > 0)
    return (SpecField(g, rho1.data * (k1 * k2 * inv)),
            SpecField(g, rho1.data * (-(k1 * k1) * inv)))


def nonlinear_tendency(state, backend=None) -> SpecField:
    """``-(u . grad rho1) - u2 d_x2 rho0`` (dissipation excluded)."""
    ws = _ws(state, backend)
    if isinstance(state, FullState):
        data = ws.tendency(state.rho.data, ws.background_gradient(None))
    else:
        data = ws.tendency(state.rho1.data, ws.background_gradient(
            None if state.rho0 is None else state.rho0.data))
    if not np.all(np.isfinite(data)):
        raise BlowUp(f"non-finite tendency at t={state.t}")
    return SpecField(state.grid, data)


def _lawson_step(ws: Workspace, y, rho0, alpha, h, linear_only=False):
    """One Lawson RK4 step of size ``h`` (may be negative).

    Returns ``(y_new, rho0_new)``; the background is propagated exactly.
    """
    E, Eh = ws.propagators(h)
    kern = ws.kern
    if linear_only:
        return y * E, rho0
    if rho0 is None:
        r_n = r_half = r_end = ws.background_gradient(None)
        rho0_end = None
    else:
        # negative h (backward probes) uses the exact inverse propagator
        rho0_half = rho0 * heat_symbol(ws.line, alpha, 0.5 * h)
        rho0_end = rho0 * heat_symbol(ws.line, alpha, h)
        r_n = ws.background_gradient(rho0)
        r_half = ws.background_gradient(rho0_half)
        r_end = ws.background_gradient(rho0_end)

    k1 = ws.tendency(y, r_n)
    umax0 = ws.last_umax
    a = np.empty_like(y)
    kern.lawson_stage(Eh, y, 0.5 * h, Eh, k1, a)
    k2 = ws.tendency(a, r_half)
    b = np.empty_like(y)
    kern.lawson_stage(Eh, y, 0.5 * h, ws.ones, k2, b)
    k3 = ws.tendency(b, r_half)
    c = np.empty_like(y)
    kern.lawson_stage(E, y, h, Eh, k3, c)
    k4 = ws.tendency(c, r_end)
    out = np.empty_like(y)
    kern.lawson_final(E, Eh, y, h, k1, k2, k3, k4, out)
    ws.last_umax = umax0
    return out, rho0_end


def cfl_limit(state, backend=None) -> float:
    """Largest admissible step ``cfl * min(dx) / max(1e-12, ||u||_inf)``."""
    ws = _ws(state, backend)
    rho = state.rho.data if isinstance(state, FullState) else state.rho1.data
    u1, u2, _, _ = ws.fields(rho)
    umax = float(np.sqrt(np.max(u1 * u1 + u2 * u2)))
    return state.params.cfl * min(state.grid.dx) / max(1e-12, umax)


def step(state, h, backend=None, linear_only=False):
    """Advance by exactly ``h`` with no CFL control; ``h`` may be negative."""
    ws = _ws(state, backend)
    p = state.params
    if isinstance(state, FullState):
        y, _ = _lawson_step(ws, state.rho.data, None, p.alpha, h, linear_only)
        if not np.all(np.isfinite(y)):
            raise BlowUp(f"non-finite state after step at t={state.t}")
        return replace(state, t=state.t + h, rho=SpecField(state.grid, y), step=state.step + 1)
    r0 = None if state.rho0 is None else state.rho0.data
    y, r0n = _lawson_step(ws, state.rho1.data, r0, p.alpha, h, linear_only)
    if not np.all(np.isfinite(y)):
        raise BlowUp(f"non-finite state after step at t={state.t}")
    rho0 = None if r0n is None else SpecField(state.rho0.grid, r0n)
    return replace(state, t=state.t + h, rho1=SpecField(state.grid, y), rho0=rho0,
                   step=state.step + 1)


def advance(state, dt, backend=None, linear_only=False):
    """Advance one step of at most ``dt`` under the CFL condition.

    If ``dt`` violates the advective CFL limit it is halved (up to 20 times)
    and the step is taken with the reduced size; check ``state.t`` for the
    time actually reached.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    limit = cfl_limit(state, backend)
    halvings = 0
    while dt > limit:
        dt *= 0.5
        halvings += 1
        if halvings > MAX_HALVINGS:
            raise ResolutionExhausted(
                f"CFL limit {limit:.3e} not met after {MAX_HALVINGS} halvings at t={state.t}")
    return step(state, dt, backend, linear_only)


def total_density(state) -> SpecField:
    """``rho0 + rho1`` (decomposed) or ``rho`` (full) on the 2-D grid."""
    if isinstance(state, FullState):
        return state.rho
    if state.rho0 is None:
        return state.rho1
    return state.rho1 + broadcast_background(state.rho0, state.grid)


def background_at(params: ParamSet, t: float) -> SpecField:
    """Exact background spectrum ``K_alpha(t) f`` on the ``x2`` line."""
    grid = params.grid().line()
    return heat_propagate(background_profile(params).spectrum(grid), params.alpha, t)
