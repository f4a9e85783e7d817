"""Seeded battery of operator identities on random band-limited fields.

Each check returns a :class:`CheckResult` with the worst error seen and the
tolerance it was held to.  Passing a check's name in ``inject`` corrupts the
operator symbol inside that check, which must then fail.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass

import numpy as np

from . import solver
from .spectral import (
    Field,
    Grid1D,
    Grid2D,
    SpecField,
    dealias,
    derivative,
    dir_frac_laplacian,
    hermitian_defect,
    inverse_transform,
    power_symbol,
    spectral_energy,
    transform,
)

S_VALUES = (0.5, 1.0, 1.5, 2.0)
IDENTITY_TOL = 1e-11
VELOCITY_TOL = 1e-12


@dataclass
class CheckResult:
    name: str
    error: float
    tolerance: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: error={self.error:.3e} tol={self.tolerance:.1e} {self.detail}".rstrip()

    def as_dict(self) -> dict:
        return asdict(self)


def random_field(grid, rng, fraction=2 / 3, smooth=0.0) -> SpecField:
    """Real random field with modes outside the dealiasing mask removed.

    ``smooth > 0`` damps the spectrum by ``exp(-smooth |xi|)``.
    """
    spec = transform(Field(grid, rng.standard_normal(grid.shape)))
    data = spec.data * grid.dealias_mask(fraction)
    if smooth > 0:
        data = data * np.exp(-smooth * grid.abs_k)
    return SpecField(grid, data)


def _rel(err, scale):
    return float(err / scale) if scale > 0 else float(err)


# ---------------------------------------------------------------- individual checks


def check_ratio_bounds(grid, corrupt=False, s_values=S_VALUES) -> CheckResult:
    """``1/2 <= |xi|^s / (|xi1|^s + |xi2|^s) <= 2^{s/2}`` on every nonzero wavenumber."""
    nz = grid.abs_k > 0
    worst = 0.0
    for s in s_values:
        num = power_symbol(grid, s)[nz]
        if corrupt:
            num = num * 0.25
        den = (np.abs(grid.k(1)) ** s + np.abs(grid.k(2)) ** s)[nz]
        r = num / den
        worst = max(worst, 0.5 - r.min(), r.max() - 2 ** (s / 2))
    err = max(worst, 0.0)
    return CheckResult("ratio_bounds", err, 0.0, err <= 0.0, f"s in {list(s_values)}")


def check_slice_identity(fields, s=1.0, corrupt=False) -> CheckResult:
    """Directional ``Lambda_2^s`` equals the 1-D operator on every ``x1``-slice."""
    worst = 0.0
    for f in fields:
        g = f.grid
        line = Grid1D(g.n2, g.L2)
        out2d = inverse_transform(dir_frac_laplacian(f, 2, s)).data
        rows = inverse_transform(f).data
        sym = power_symbol(line, s)
        if corrupt:
            sym = sym * (1 + 1e-6)
        ref = np.empty_like(rows)
        for i in range(g.n1):
            sl = transform(Field(line, rows[i]))
            ref[i] = inverse_transform(SpecField(line, sl.data * sym)).data
        worst = max(worst, _rel(np.max(np.abs(out2d - ref)), np.max(np.abs(ref))))
    return CheckResult("slice_identity", worst, IDENTITY_TOL, worst <= IDENTITY_TOL, f"s={s}")


def check_product_identity(fields, profiles, s=1.0, corrupt=False) -> CheckResult:
    """``Lambda_1^s (f g) = g Lambda_1^s f`` when ``g`` depends on ``x2`` only."""
    worst = 0.0
    for f, g1 in zip(fields, profiles):
        grid = f.grid
        gx = inverse_transform(g1).data[None, :]
        fx = inverse_transform(f).data
        lhs_spec = dir_frac_laplacian(transform(Field(grid, fx * gx)), 1, s)
        if corrupt:
            lhs_spec = SpecField(grid, lhs_spec.data * (1 + 1e-6))
        lhs = inverse_transform(lhs_spec).data
        rhs = gx * inverse_transform(dir_frac_laplacian(f, 1, s)).data
        worst = max(worst, _rel(np.max(np.abs(lhs - rhs)), np.max(np.abs(rhs))))
    return CheckResult("product_identity", worst, IDENTITY_TOL, worst <= IDENTITY_TOL, f"s={s}")


def check_norm_equivalence(fields, corrupt=False, s_values=S_VALUES) -> CheckResult:
    """``||f||_{H^s dot} / (||Lambda_1^s f|| + ||Lambda_2^s f||)`` within ``[1/2, 2^{s/2}]``."""
    worst = 0.0
    for f in fields:
        g = f.grid
        for s in s_values:
            num = math.sqrt(spectral_energy(g, f.data, power_symbol(g, s) ** 2))
            if corrupt:
                num *= 0.25
            d1 = math.sqrt(spectral_energy(g, f.data, np.abs(g.k(1)) ** (2 * s)))
            d2 = math.sqrt(spectral_energy(g, f.data, np.abs(g.k(2)) ** (2 * s)))
            r = num / (d1 + d2)
            worst = max(worst, 0.5 - r, r - 2 ** (s / 2) - 1e-12)
    err = max(worst, 0.0)
    return CheckResult("norm_equivalence", err, 0.0, err <= 0.0)


def check_divergence(fields, corrupt=False) -> CheckResult:
    """Discrete divergence of the velocity vanishes."""
    worst = 0.0
    for f in fields:
        u1, u2 = solver.compute_velocity(f)
        if corrupt:
            u1 = u1 * (1 + 1e-6)
        div = derivative(u1, 1).data + derivative(u2, 2).data
        worst = max(worst, _rel(np.max(np.abs(div)), np.max(np.abs(derivative(f, 1).data))))
    return CheckResult("divergence_free", worst, VELOCITY_TOL, worst <= VELOCITY_TOL)


def check_velocity_domination(fields, alpha=1.5, s=1.0, corrupt=False) -> CheckResult:
    """``||u||_{H^gamma dot} <= ||rho||_{H^gamma dot}`` for the monitored exponents."""
    worst = 0.0
    for f in fields:
        g = f.grid
        u1, u2 = solver.compute_velocity(f)
        if corrupt:
            u1, u2 = u1 * 2.0, u2 * 2.0
        for gamma in (0.0, alpha / 2, s, s + alpha / 2):
            sym = power_symbol(g, gamma) ** 2
            nu = spectral_energy(g, u1.data, sym) + spectral_energy(g, u2.data, sym)
            nr = spectral_energy(g, f.data, sym)
            worst = max(worst, _rel(math.sqrt(nu) - math.sqrt(nr), math.sqrt(nr)))
    err = max(worst, 0.0)
    return CheckResult("velocity_domination", err, VELOCITY_TOL, err <= VELOCITY_TOL,
                       f"alpha={alpha} s={s}")


def check_plancherel(fields, corrupt=False) -> CheckResult:
    """Spectral ``L^2`` norm equals the grid quadrature of ``|f|^2``."""
    worst = 0.0
    for f in fields:
        g = f.grid
        x = inverse_transform(f).data
        quad = g.cell_area * float(np.sum(x * x))
        spec = spectral_energy(g, f.data)
        if corrupt:
            spec *= 1 + 1e-6
        worst = max(worst, _rel(abs(quad - spec), quad))
    return CheckResult("plancherel", worst, IDENTITY_TOL, worst <= IDENTITY_TOL)


def check_product_rule(fields, corrupt=False) -> CheckResult:
    """``d1 (f g) = f d1 g + g d1 f`` for fields limited to half the spectrum."""
    worst = 0.0
    for a, b in zip(fields[::2], fields[1::2]):
        # strictly below n/4 so the product stays clear of the Nyquist mode
        a, b = dealias(a, 0.49), dealias(b, 0.49)
        g = a.grid
        fa, fb = inverse_transform(a).data, inverse_transform(b).data
        da = inverse_transform(derivative(a, 1)).data
        db = inverse_transform(derivative(b, 1)).data
        prod = transform(Field(g, fa * fb))
        lhs = inverse_transform(derivative(prod, 1)).data
        if corrupt:
            lhs = lhs * (1 + 1e-6)
        rhs = fa * db + fb * da
        worst = max(worst, _rel(np.max(np.abs(lhs - rhs)), np.max(np.abs(rhs))))
    return CheckResult("product_rule", worst, IDENTITY_TOL, worst <= IDENTITY_TOL)


def check_hermitian(fields, corrupt=False) -> CheckResult:
    """Spectra of real fields are Hermitian-symmetric."""
    worst = 0.0
    for f in fields:
        spec = f
        if corrupt:
            spec = SpecField(f.grid, f.data + 1e-3j * (f.grid.abs_k > 0))
        worst = max(worst, _rel(hermitian_defect(spec), np.max(np.abs(f.data))))
    return CheckResult("hermitian", worst, IDENTITY_TOL, worst <= IDENTITY_TOL)


CHECKS = ("ratio_bounds", "slice_identity", "product_identity", "norm_equivalence",
          "divergence_free", "velocity_domination", "plancherel", "product_rule", "hermitian")


def run_battery(seed=0, n_fields=100, n=256, L=2 * math.pi, inject=(), s=1.0) -> list[CheckResult]:
    """Run every check; ``inject`` names checks whose symbols get corrupted."""
    unknown = set(inject) - set(CHECKS)
    if unknown:
        raise ValueError(f"unknown check(s) {sorted(unknown)}; expected names from {CHECKS}")
    grid = Grid2D(n, n, L, L)
    line = grid.line()
    rng = np.random.default_rng(seed)
    fields = [random_field(grid, rng) for _ in range(n_fields)]
    profiles = [random_field(line, rng) for _ in range(n_fields)]
    c = set(inject)
    return [
        check_ratio_bounds(grid, "ratio_bounds" in c),
        check_slice_identity(fields, s, "slice_identity" in c),
        check_product_identity(fields, profiles, s, "product_identity" in c),
        check_norm_equivalence(fields, "norm_equivalence" in c),
        check_divergence(fields, "divergence_free" in c),
        check_velocity_domination(fields, 1.5, 1.0, "velocity_domination" in c),
        check_plancherel(fields, "plancherel" in c),
        check_product_rule(fields, "product_rule" in c),
        check_hermitian(fields, "hermitian" in c),
    ]


def timed_battery(**kw):
    t0 = time.perf_counter()
    res = run_battery(**kw)
    return res, time.perf_counter() - t0
