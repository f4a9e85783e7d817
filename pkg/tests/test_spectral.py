import math

import numpy as np
import pytest
from scipy import integrate

from dipm.spectral import (
    Field,
    Grid1D,
    Grid2D,
    MultiplierSpec,
    SpecField,
    anisotropic_symbol,
    apply_multiplier,
    combined_anisotropic,
    dealias,
    derivative,
    dir_frac_laplacian,
    frac_laplacian,
    full_spectrum,
    hermitian_defect,
    homogeneous_norm,
    inner,
    inverse_transform,
    l2_norm,
    lp_norm,
    mixed_norm,
    resample,
    riesz,
    sobolev_norm,
    sup_norm,
    transform,
)


def _brute_dft2(x):
    n1, n2 = x.shape
    j1, j2 = np.arange(n1), np.arange(n2)
    W1 = np.exp(-2j * np.pi * np.outer(j1, j1) / n1)
    W2 = np.exp(-2j * np.pi * np.outer(j2, j2) / n2)
    return W1 @ x @ W2.T / math.sqrt(n1 * n2)


def test_transform_matches_brute_force_dft(rng):
    g = Grid2D(12, 10, 3.0, 5.0)
    x = rng.standard_normal(g.shape)
    spec = transform(Field(g, x))
    ref = _brute_dft2(x)
    assert np.allclose(spec.data, ref[:, : g.n2 // 2 + 1], atol=1e-13)
    assert np.allclose(full_spectrum(spec), ref, atol=1e-13)


def test_roundtrip_and_hermitian(rng, grid64):
    x = rng.standard_normal(grid64.shape)
    spec = transform(Field(grid64, x))
    assert np.allclose(inverse_transform(spec).data, x, atol=1e-13)
    assert hermitian_defect(spec) < 1e-13


def test_transform_rejects_non_finite(grid64):
    x = np.zeros(grid64.shape)
    x[3, 5] = np.nan
    with pytest.raises(ValueError, match=r"\(3, 5\)"):
        transform(Field(grid64, x))


@pytest.mark.parametrize("n", [7, 22, 0])
def test_grid_rejects_bad_sizes(n):
    with pytest.raises(ValueError):
        Grid1D(n)


def test_shape_mismatch_rejected(grid64):
    with pytest.raises(ValueError):
        SpecField(grid64, np.zeros((64, 64), dtype=complex))


def test_derivative_of_trig_modes(grid64):
    x1, x2 = grid64.coords()
    f = np.sin(3 * x1) * np.cos(2 * x2)
    spec = transform(Field(grid64, f))
    d1 = inverse_transform(derivative(spec, 1)).data
    d22 = inverse_transform(derivative(spec, 2, 2)).data
    assert np.allclose(d1, 3 * np.cos(3 * x1) * np.cos(2 * x2), atol=1e-12)
    assert np.allclose(d22, -4 * f, atol=1e-12)


def test_frac_laplacian_on_single_mode(grid64):
    x1, x2 = grid64.coords()
    f = np.cos(3 * x1 + 4 * x2)
    spec = transform(Field(grid64, f))
    out = inverse_transform(frac_laplacian(spec, 0.7)).data
    assert np.allclose(out, 5**0.7 * f, atol=1e-12)
    out = inverse_transform(dir_frac_laplacian(spec, 2, 1.5)).data
    assert np.allclose(out, 4**1.5 * f, atol=1e-12)


def test_negative_power_zero_mode_and_limits(grid64):
    spec = transform(Field(grid64, np.ones(grid64.shape)))
    assert np.allclose(frac_laplacian(spec, -0.5).data, 0)
    with pytest.raises(ValueError):
        frac_laplacian(spec, -1.5)
    with pytest.raises(ValueError):
        dir_frac_laplacian(spec, 1, -0.1)
    with pytest.raises(ValueError):
        derivative(spec, 3)


def test_riesz_of_single_mode(grid64):
    x1, x2 = grid64.coords()
    f = np.cos(3 * x1 + 4 * x2)
    spec = transform(Field(grid64, f))
    r1 = inverse_transform(riesz(spec, 1)).data
    # R1 cos(k.x) = -(k1/|k|) sin(k.x)
    assert np.allclose(r1, -0.6 * np.sin(3 * x1 + 4 * x2), atol=1e-12)


def test_anisotropic_ratio_value():
    g = Grid2D(8, 8)
    sym = anisotropic_symbol(g, 1.0)
    assert math.isclose(g.abs_k[1, 1] / sym[1, 1], math.sqrt(2) / 2)
    inv = anisotropic_symbol(g, 1.0, "inverse")
    assert inv[0, 0] == 0 and math.isclose(inv[1, 1], 0.5)
    spec = transform(Field(g, np.random.default_rng(0).standard_normal(g.shape)))
    back = combined_anisotropic(combined_anisotropic(spec, 0.5), 0.5, "inverse")
    back.data[0, 0] = spec.data[0, 0]
    assert np.allclose(back.data, spec.data)
    with pytest.raises(ValueError):
        anisotropic_symbol(g, 1.0, "sideways")


def test_multiplier_spec(grid64, rng):
    spec = dealias(transform(Field(grid64, rng.standard_normal(grid64.shape))))
    # i k1 / |k| with the origin singular: the Riesz transform
    m = MultiplierSpec(lambda k1, k2: 1j * k1 / np.sqrt(k1**2 + k2**2))
    out = apply_multiplier(spec, m)
    assert np.allclose(out.data, riesz(spec, 1).data, atol=1e-14)
    assert out.data[0, 0] == 0


def test_dealiased_product_matches_analytic():
    g = Grid1D(64)
    s = transform(Field(g, np.sin(g.x)))
    s = dealias(s)
    x = inverse_transform(s).data
    prod = dealias(transform(Field(g, x * x)))
    assert np.allclose(inverse_transform(prod).data, (1 - np.cos(2 * g.x)) / 2, atol=1e-12)


def test_dealias_mask_cutoff():
    g = Grid1D(12)
    m = g.dealias_mask(2 / 3)
    assert m[:5].all() and not m[5:].any()


def test_norms_of_known_functions(grid64):
    x1, x2 = grid64.coords()
    f = np.sin(x1) * np.sin(2 * x2)
    spec = transform(Field(grid64, f))
    area = (2 * math.pi) ** 2
    assert math.isclose(l2_norm(spec), math.sqrt(area / 4), rel_tol=1e-12)
    assert math.isclose(l2_norm(Field(grid64, f)), math.sqrt(area / 4), rel_tol=1e-12)
    assert math.isclose(homogeneous_norm(spec, 1), math.sqrt(5 * area / 4), rel_tol=1e-12)
    assert math.isclose(sobolev_norm(spec, 1), math.sqrt(6 * area / 4), rel_tol=1e-12)
    assert math.isclose(inner(spec, spec), area / 4, rel_tol=1e-12)
    assert math.isclose(sup_norm(spec), 1.0, rel_tol=1e-12)


def test_sup_norm_beats_grid_max():
    g = Grid1D(16)
    # peak falls between grid points
    f = np.cos(3 * (g.x - 0.1))
    assert np.max(np.abs(f)) < 0.999
    assert math.isclose(sup_norm(Field(g, f)), 1.0, rel_tol=1e-3)


@pytest.mark.parametrize("p", [1.0, 1.5, 3.0, 4.0])
@pytest.mark.parametrize("shift,tol", [(0.2, 1e-10), (1.2, 1e-4)])
def test_lp_norm_against_quadrature(p, shift, tol):
    # shift=1.2 puts zero crossings in f, so |f|^p has kinks and the
    # rectangle rule loses its spectral accuracy
    L = 2 * math.pi
    g = Grid1D(256, L)

    def f(x):
        return np.exp(np.cos(x)) - shift

    ref = integrate.quad(lambda x: abs(f(x)) ** p, 0, L, limit=200)[0] ** (1 / p)
    assert math.isclose(lp_norm(Field(g, f(g.x)), p), ref, rel_tol=tol)
    assert lp_norm(Field(g, np.zeros(256)), p) == 0.0


def test_lp_norm_rejects_small_p(line128):
    with pytest.raises(ValueError):
        lp_norm(Field(line128, np.ones(128)), 0.5)


def test_mixed_norm(grid64):
    x1, x2 = grid64.coords()
    f = (2 + np.cos(x1)) * np.sin(x2)
    # inner L^inf over x2 gives 2 + cos x1; outer L^1 over x1 gives 4 pi
    assert math.isclose(mixed_norm(Field(grid64, f), np.inf, 1), 4 * math.pi, rel_tol=1e-3)
    assert math.isclose(mixed_norm(Field(grid64, f), 2, np.inf),
                        3 * math.sqrt(math.pi), rel_tol=1e-12)
    with pytest.raises(ValueError):
        mixed_norm(Field(grid64, f), 0.5, 1)


def test_resample_preserves_band_limited_fields(rng):
    lo, hi = Grid2D(32, 32), Grid2D(64, 64)
    spec = dealias(transform(Field(lo, rng.standard_normal(lo.shape))))
    up = resample(spec, hi)
    assert math.isclose(l2_norm(up), l2_norm(spec), rel_tol=1e-12)
    back = resample(up, lo)
    assert np.allclose(back.data, spec.data, atol=1e-13)
    # physical values agree on the shared points
    assert np.allclose(inverse_transform(up).data[::2, ::2], inverse_transform(spec).data,
                       atol=1e-12)
    with pytest.raises(ValueError):
        resample(spec, Grid2D(64, 64, 1.0, 1.0))
