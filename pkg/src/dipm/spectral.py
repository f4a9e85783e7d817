"""Fourier-multiplier engine on periodic grids.

Fields live on a torus ``[0, L1) x [0, L2)`` (or ``[0, L)`` in 1-D) sampled
uniformly.  Spectra use the real-to-complex layout of ``scipy.fft.rfftn``
with unitary ("ortho") normalization: the last axis (``x2`` in 2-D) keeps
only the non-negative wavenumbers, every other axis is stored in full.

Operators here are pure functions that take a :class:`SpecField` and return
a new one.  Norms accept either a :class:`Field` or a :class:`SpecField` and
transform on demand.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from functools import cached_property
from typing import Callable, Union

import numpy as np
import scipy.fft as sfft

FFT_PRIMES = (2, 3, 5, 7)
UPSAMPLE = 4


def _fft_friendly(n: int) -> bool:
    for p in FFT_PRIMES:
        while n % p == 0 and n > 1:
            n //= p
    return n == 1


def _check_size(n, name):
    if not isinstance(n, (int, np.integer)) or n <= 0:
        raise ValueError(f"{name} must be a positive integer, got {n!r}")
    if n % 2:
        raise ValueError(f"{name} must be even, got {n}")
    if not _fft_friendly(int(n)):
        raise ValueError(f"{name}={n} has a prime factor larger than 7")


def _wavenumbers(n, L):
    # signed integer index table, numpy ordering (Nyquist stored as -n/2)
    idx = np.fft.fftfreq(n, d=1.0 / n)
    return idx * (2 * np.pi / L)


class _GridBase:
    """Shared cached tables.  Subclasses define ``shape``, ``lengths``."""

    ndim: int

    @cached_property
    def dx(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.lengths, self.shape))

    @cached_property
    def cell_area(self) -> float:
        return float(np.prod(self.dx))

    @cached_property
    def spec_shape(self) -> tuple[int, ...]:
        return self.shape[:-1] + (self.shape[-1] // 2 + 1,)

    @cached_property
    def _axis_tables(self):
        """Per-axis wavenumbers broadcast to the spectral layout."""
        tabs = []
        for ax, (n, L) in enumerate(zip(self.shape, self.lengths)):
            k = _wavenumbers(n, L)
            if ax == self.ndim - 1:
                k = np.abs(k[: n // 2 + 1])
            shape = [1] * self.ndim
            shape[ax] = k.size
            tabs.append(k.reshape(shape))
        return tuple(tabs)

    @cached_property
    def _index_tables(self):
        """Integer |k| index per axis, broadcastable to the spectral layout."""
        tabs = []
        for ax, n in enumerate(self.shape):
            idx = np.abs(np.fft.fftfreq(n, d=1.0 / n))
            if ax == self.ndim - 1:
                idx = idx[: n // 2 + 1]
            shape = [1] * self.ndim
            shape[ax] = idx.size
            tabs.append(idx.reshape(shape))
        return tuple(tabs)

    def k(self, axis: int) -> np.ndarray:
        """Signed wavenumbers of ``axis`` (1-based) in the spectral layout."""
        return self._axis_tables[axis - 1]

    def k_odd(self, axis: int) -> np.ndarray:
        """Wavenumbers with the Nyquist entry zeroed.

        Odd symbols (derivatives, Riesz transforms) must vanish at the
        Nyquist frequency or they break Hermitian symmetry.
        """
        k = self._axis_tables[axis - 1].copy()
        n = self.shape[axis - 1]
        k[self._index_tables[axis - 1] == n // 2] = 0.0
        return k

    @cached_property
    def abs_k(self) -> np.ndarray:
        return np.sqrt(sum(k**2 for k in self._axis_tables))

    @cached_property
    def spec_weights(self) -> np.ndarray:
        """Multiplicity of each stored coefficient in the full spectrum."""
        n = self.shape[-1]
        w = np.full(n // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        shape = [1] * self.ndim
        shape[-1] = w.size
        return w.reshape(shape)

    def dealias_mask(self, fraction: float) -> np.ndarray:
        if not 0 < fraction <= 1:
            raise ValueError(f"dealias fraction must lie in (0, 1], got {fraction}")
        mask = np.ones(self.spec_shape, dtype=bool)
        for idx, n in zip(self._index_tables, self.shape):
            mask &= idx <= fraction * (n / 2)
        return mask

    def coords(self):
        axes = [np.arange(n) * (L / n) for n, L in zip(self.shape, self.lengths)]
        if self.ndim == 1:
            return axes[0]
        return np.meshgrid(*axes, indexing="ij")


@dataclass(frozen=True)
class Grid1D(_GridBase):
    """Uniform periodic grid on ``[0, L)``."""

    n: int
    L: float = 2 * np.pi
    ndim = 1

    def __post_init__(self):
        _check_size(self.n, "n")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")

    @property
    def shape(self):
        return (self.n,)

    @property
    def lengths(self):
        return (float(self.L),)

    @cached_property
    def kx(self) -> np.ndarray:
        """Full signed wavenumber table (length ``n``)."""
        return _wavenumbers(self.n, self.L)

    @property
    def x(self) -> np.ndarray:
        return self.coords()


@dataclass(frozen=True)
class Grid2D(_GridBase):
    """Uniform periodic grid on ``[0, L1) x [0, L2)``, axis order (x1, x2)."""

    n1: int
    n2: int
    L1: float = 2 * np.pi
    L2: float = 2 * np.pi
    ndim = 2

    def __post_init__(self):
        _check_size(self.n1, "n1")
        _check_size(self.n2, "n2")
        if not (self.L1 > 0 and self.L2 > 0):
            raise ValueError(f"periods must be positive, got L1={self.L1}, L2={self.L2}")

    @property
    def shape(self):
        return (self.n1, self.n2)

    @property
    def lengths(self):
        return (float(self.L1), float(self.L2))

    @cached_property
    def k1(self) -> np.ndarray:
        return _wavenumbers(self.n1, self.L1)

    @cached_property
    def k2(self) -> np.ndarray:
        return _wavenumbers(self.n2, self.L2)

    def line(self) -> Grid1D:
        """The 1-D grid of the ``x2`` axis (where the background lives)."""
        return Grid1D(self.n2, self.L2)


Grid = Union[Grid1D, Grid2D]


@dataclass(frozen=True, eq=False)
class Field:
    """Real samples on a grid."""

    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        if self.data.shape != self.grid.shape:
            raise ValueError(f"field shape {self.data.shape} != grid shape {self.grid.shape}")


@dataclass(frozen=True, eq=False)
class SpecField:
    """Fourier coefficients (rfft layout, unitary normalization)."""

    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        if self.data.shape != self.grid.spec_shape:
            raise ValueError(
                f"spectrum shape {self.data.shape} != expected {self.grid.spec_shape}"
            )

    def __add__(self, other):
        return SpecField(self.grid, self.data + _coeffs(other))

    def __sub__(self, other):
        return SpecField(self.grid, self.data - _coeffs(other))

    def __mul__(self, c):
        return SpecField(self.grid, self.data * c)

    __rmul__ = __mul__

    def __neg__(self):
        return SpecField(self.grid, -self.data)

    def copy(self):
        return SpecField(self.grid, self.data.copy())


# aliases matching the 1-D/2-D vocabulary used elsewhere
Field1D = Field2D = Field
SpecField1D = SpecField2D = SpecField


def _coeffs(x):
    return x.data if isinstance(x, SpecField) else x


@dataclass(frozen=True)
class MultiplierSpec:
    """A Fourier multiplier given by its symbol.

    ``symbol`` receives the per-axis wavenumber tables (broadcastable arrays,
    odd-safe: Nyquist entries zeroed) and returns the symbol values.  Where the
    result is non-finite, or where ``singular(*k)`` is true, ``zero_mode`` is
    used instead.
    """

    symbol: Callable[..., np.ndarray]
    zero_mode: complex = 0.0
    singular: Callable[..., np.ndarray] | None = dc_field(default=None)

    def evaluate(self, grid: Grid) -> np.ndarray:
        ks = [grid.k_odd(ax + 1) for ax in range(grid.ndim)]
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = np.broadcast_to(self.symbol(*ks), grid.spec_shape).copy()
            bad = ~np.isfinite(vals)
            if self.singular is not None:
                bad |= np.broadcast_to(self.singular(*ks), grid.spec_shape)
        vals[bad] = self.zero_mode
        return vals


def apply_multiplier(spec: SpecField, mult: MultiplierSpec) -> SpecField:
    return SpecField(spec.grid, spec.data * mult.evaluate(spec.grid))


# ---------------------------------------------------------------- transforms


def transform(field: Field) -> SpecField:
    """Forward unitary real-to-complex transform."""
    vals = np.asarray(field.data, dtype=float)
    if not np.all(np.isfinite(vals)):
        bad = tuple(int(i) for i in np.argwhere(~np.isfinite(vals))[0])
        raise ValueError(f"non-finite field value at index {bad}: {vals[bad]!r}")
    return SpecField(field.grid, sfft.rfftn(vals, norm="ortho"))


def inverse_transform(spec: SpecField) -> Field:
    g = spec.grid
    return Field(g, sfft.irfftn(spec.data, s=g.shape, norm="ortho"))


def full_spectrum(spec: SpecField) -> np.ndarray:
    """Expand an rfft-layout spectrum to the full complex FFT array."""
    g = spec.grid
    n = g.shape[-1]
    full = np.empty(g.shape, dtype=complex)
    full[..., : n // 2 + 1] = spec.data
    # mirror: F(-k) = conj F(k)
    tail = spec.data[..., 1 : n // 2][..., ::-1]
    if g.ndim == 2:
        tail = np.roll(tail[::-1, :], 1, axis=0)
    full[..., n // 2 + 1 :] = np.conj(tail)
    return full


def hermitian_defect(spec: SpecField) -> float:
    """Largest |F(-k) - conj F(k)| over the self-conjugate columns."""
    d = spec.data
    if spec.grid.ndim == 1:
        return float(max(abs(d[0].imag), abs(d[-1].imag)))
    cols = d[:, [0, -1]]
    mirrored = np.roll(cols[::-1, :], 1, axis=0)
    return float(np.max(np.abs(mirrored - np.conj(cols))))


# ---------------------------------------------------------------- operators


def frac_laplacian(spec: SpecField, gamma: float, zero_mode: float = 0.0) -> SpecField:
    """Apply ``Lambda^gamma`` (symbol ``|xi|^gamma``)."""
    if gamma < -1:
        raise ValueError(f"gamma must be >= -1, got {gamma}")
    return SpecField(spec.grid, spec.data * power_symbol(spec.grid, gamma, zero_mode))


def power_symbol(grid: Grid, gamma: float, zero_mode: float = 0.0) -> np.ndarray:
    ak = grid.abs_k
    if gamma == 0:
        return np.ones_like(ak)
    with np.errstate(divide="ignore"):
        out = ak**gamma
    if gamma < 0:
        out[ak == 0] = zero_mode
    return out


def dir_frac_laplacian(spec: SpecField, axis: int, gamma: float) -> SpecField:
    """Apply ``Lambda_axis^gamma`` (symbol ``|xi_axis|^gamma``)."""
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    _check_axis(spec.grid, axis)
    sym = np.abs(spec.grid.k(axis)) ** gamma
    return SpecField(spec.grid, spec.data * sym)


def derivative(spec: SpecField, axis: int, order: int = 1) -> SpecField:
    _check_axis(spec.grid, axis)
    k = spec.grid.k_odd(axis) if order % 2 else spec.grid.k(axis)
    return SpecField(spec.grid, spec.data * (1j * k) ** order)


def riesz_symbol(grid: Grid, axis: int) -> np.ndarray:
    ak = grid.abs_k
    with np.errstate(divide="ignore", invalid="ignore"):
        sym = np.where(ak > 0, 1j * grid.k_odd(axis) / ak, 0.0)
    return sym


def riesz(spec: SpecField, axis: int) -> SpecField:
    """Riesz transform ``R_axis`` (symbol ``i xi_axis / |xi|``, zero at the origin)."""
    _check_axis(spec.grid, axis)
    return SpecField(spec.grid, spec.data * riesz_symbol(spec.grid, axis))


def anisotropic_symbol(grid: Grid2D, beta: float, mode: str = "apply") -> np.ndarray:
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    s = np.abs(grid.k(1)) ** beta + np.abs(grid.k(2)) ** beta
    if mode == "apply":
        return s
    if mode != "inverse":
        raise ValueError(f"mode must be 'apply' or 'inverse', got {mode!r}")
    out = np.zeros(grid.spec_shape)
    np.divide(1.0, s, out=out, where=grid.abs_k > 0)
    return out


def combined_anisotropic(spec: SpecField, beta: float, mode: str = "apply") -> SpecField:
    """Multiply by ``(|xi1|^beta + |xi2|^beta)^(+1 or -1)``."""
    return SpecField(spec.grid, spec.data * anisotropic_symbol(spec.grid, beta, mode))


def dealias(spec: SpecField, fraction: float = 2 / 3) -> SpecField:
    """Zero modes with ``|k_axis| > fraction * n_axis / 2`` on any axis."""
    return SpecField(spec.grid, spec.data * spec.grid.dealias_mask(fraction))


def _check_axis(grid, axis):
    if axis not in range(1, grid.ndim + 1):
        raise ValueError(f"axis must be in 1..{grid.ndim}, got {axis}")


# ---------------------------------------------------------------- norms


def _as_spec(x) -> SpecField:
    return x if isinstance(x, SpecField) else transform(x)


def _as_field(x) -> Field:
    return x if isinstance(x, Field) else inverse_transform(x)


def _spec_scale(grid) -> float:
    # continuous L2 = cell_area * sum over full spectrum (unitary transform)
    return grid.cell_area


def inner(a, b) -> float:
    """Continuous ``int a b dx`` for real fields, evaluated spectrally."""
    a, b = _as_spec(a), _as_spec(b)
    g = a.grid
    return float(_spec_scale(g) * np.sum(g.spec_weights * (a.data.conj() * b.data).real))


def spectral_energy(grid, coeffs, symbol_sq=None) -> float:
    """``cell_area * sum w |sym F|^2`` without building intermediates."""
    p = coeffs.real**2 + coeffs.imag**2
    if symbol_sq is not None:
        p = p * symbol_sq
    return float(_spec_scale(grid) * np.sum(grid.spec_weights * p))


def l2_norm(x) -> float:
    if isinstance(x, Field):
        return float(np.sqrt(x.grid.cell_area * np.sum(x.data**2)))
    return float(np.sqrt(spectral_energy(x.grid, x.data)))


def homogeneous_norm(x, gamma: float) -> float:
    """``||Lambda^gamma f||_{L^2}`` via Plancherel (zero mode dropped)."""
    spec = _as_spec(x)
    if gamma < -1:
        raise ValueError(f"gamma must be >= -1, got {gamma}")
    sym = power_symbol(spec.grid, gamma)
    return float(np.sqrt(spectral_energy(spec.grid, spec.data, sym**2)))


def sobolev_norm(x, s: float) -> float:
    """``(||f||^2 + ||Lambda^s f||^2)^(1/2)``."""
    spec = _as_spec(x)
    return float(np.sqrt(l2_norm(spec) ** 2 + homogeneous_norm(spec, s) ** 2))


def lp_norm(x, p: float) -> float:
    """Rectangle-rule ``L^p`` norm; ``p = inf`` defers to :func:`sup_norm`."""
    if p == np.inf:
        return sup_norm(x)
    if not p >= 1:
        raise ValueError(f"Lp norm requires p >= 1, got {p}")
    f = _as_field(x)
    a = np.abs(f.data)
    if p == 2:
        return float(np.sqrt(f.grid.cell_area * np.sum(a * a)))
    m = a.max()
    if m == 0:
        return 0.0
    # scale first so large p does not overflow
    return float(m * (f.grid.cell_area * np.sum((a / m) ** p)) ** (1.0 / p))


def upsample(x, factor: int = UPSAMPLE) -> np.ndarray:
    """Trigonometric interpolation onto a ``factor``-times finer grid."""
    spec = _as_spec(x)
    g = spec.grid
    big = tuple(factor * n for n in g.shape)
    out = np.zeros(big[:-1] + (big[-1] // 2 + 1,), dtype=complex)
    d = spec.data.copy()
    # split Nyquist coefficients between +n/2 and -n/2 of the larger grid
    n_last = g.shape[-1]
    d[..., n_last // 2] *= 0.5
    if g.ndim == 1:
        out[: n_last // 2 + 1] = d
    else:
        n1 = g.shape[0]
        h = n1 // 2
        top = d[: h + 1].copy()
        bottom = d[h:].copy()
        top[h] *= 0.5
        bottom[0] *= 0.5
        out[: h + 1, : n_last // 2 + 1] = top
        out[big[0] - h :, : n_last // 2 + 1] = bottom
    # keep the unitary normalization consistent across grid sizes
    out *= np.sqrt(np.prod(big) / np.prod(g.shape))
    return sfft.irfftn(out, s=big, norm="ortho")


def resample(spec: SpecField, grid) -> SpecField:
    """Move a spectrum to another resolution of the same box.

    Modes resolved strictly below both Nyquist limits are kept; everything
    else (including Nyquist coefficients) is dropped or zero-filled.
    """
    src = spec.grid
    if src.ndim != grid.ndim or not np.allclose(src.lengths, grid.lengths):
        raise ValueError("resample needs grids over the same box")
    out = np.zeros(grid.spec_shape, dtype=complex)
    idx_src, idx_dst = [], []
    for ax in range(grid.ndim):
        n_s, n_d = src.shape[ax], grid.shape[ax]
        last = ax == grid.ndim - 1
        m = min(n_s, n_d) // 2
        ks = np.arange(m) if last else np.concatenate([np.arange(m), np.arange(-m + 1, 0)])
        idx_src.append(ks % n_s)
        idx_dst.append(ks % n_d)
    out[np.ix_(*idx_dst)] = spec.data[np.ix_(*idx_src)]
    out *= math.sqrt(np.prod(grid.shape) / np.prod(src.shape))
    return SpecField(grid, out)


def sup_norm(x, factor: int = UPSAMPLE) -> float:
    """``max |f|`` on a zero-padded ``factor``-times finer grid."""
    return float(np.max(np.abs(upsample(x, factor))))


def mixed_norm(x, p_inner: float, p_outer: float) -> float:
    """``|| ||f(x1, .)||_{L^p_inner(x2)} ||_{L^p_outer(x1)}``."""
    f = _as_field(x)
    if f.grid.ndim != 2:
        raise ValueError("mixed_norm needs a 2-D field")
    for p in (p_inner, p_outer):
        if not p >= 1:
            raise ValueError(f"Lp norm requires p >= 1, got {p}")
    dx1, dx2 = f.grid.dx
    a = np.abs(f.data)
    if p_inner == np.inf:
        rows = a.max(axis=1)
    else:
        rows = (dx2 * np.sum(a**p_inner, axis=1)) ** (1.0 / p_inner)
    if p_outer == np.inf:
        return float(rows.max())
    return float((dx1 * np.sum(rows**p_outer)) ** (1.0 / p_outer))
