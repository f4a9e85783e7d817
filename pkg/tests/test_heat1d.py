import json
import math

import numpy as np
import pytest

from dipm.heat1d import (
    PROFILE_KINDS,
    NormSpec,
    Profile,
    background_tendency,
    decay_scan,
    heat_decay_exponent,
    heat_propagate,
    heat_symbol,
)
from dipm.spectral import Field, Grid1D, inverse_transform, transform

WIDE = Grid1D(2048, 2 * math.pi * 20)


def test_alpha_two_matches_gaussian_heat_kernel():
    # u_t = u_xx: a Gaussian of width w spreads to sqrt(w^2 + 2t)
    w, t = 1.0, 1.7
    f = Profile("gaussian", w).spectrum(WIDE)
    out = inverse_transform(heat_propagate(f, 2.0, t)).data
    sig = math.sqrt(w * w + 2 * t)
    x = WIDE.x - WIDE.L / 2
    ref = (w / sig) * np.exp(-(x**2) / (2 * sig**2))
    assert np.max(np.abs(out - ref)) < 1e-12


def test_identity_and_semigroup(line128, rng):
    f = transform(Field(line128, rng.standard_normal(128)))
    assert np.array_equal(heat_propagate(f, 0.5, 0.0).data, f.data)
    two = heat_propagate(heat_propagate(f, 0.5, 0.3), 0.5, 0.4)
    assert np.allclose(two.data, heat_propagate(f, 0.5, 0.7).data, atol=1e-14)


def test_mean_is_preserved(line128):
    f = Profile("gaussian", 0.5, 2.0).spectrum(line128)
    out = heat_propagate(f, 1.3, 5.0)
    assert math.isclose(out.data[0].real, f.data[0].real, rel_tol=1e-14)


@pytest.mark.parametrize("alpha,t", [(0.5, -1.0), (0.0, 1.0), (2.5, 1.0)])
def test_propagate_rejects_bad_arguments(line128, alpha, t):
    f = Profile().spectrum(line128)
    with pytest.raises(ValueError):
        heat_propagate(f, alpha, t)


def test_heat_symbol_and_tendency(line128):
    sym = heat_symbol(line128, 1.0, 0.5)
    assert math.isclose(sym[3], math.exp(-1.5))
    f = transform(Field(line128, np.cos(3 * line128.x)))
    out = inverse_transform(background_tendency(f, 1.5)).data
    assert np.allclose(out, -(3**1.5) * np.cos(3 * line128.x), atol=1e-12)


def test_profiles():
    g = Grid1D(256, 20.0)
    for kind in PROFILE_KINDS:
        y = Profile(kind, 1.0, k=2.0).sample(g)
        assert np.all(np.isfinite(y))
    # the chordal bump is periodic: equal values an equal distance either side
    bump = Profile("periodic-bump", 3.0).sample(g)
    assert math.isclose(bump[1], bump[-1], rel_tol=1e-12)
    dg = Profile("derivative-gaussian").sample(g)
    assert abs(dg.sum()) < 1e-10
    assert Profile(width=1.0).tail_fraction(g) < 1e-6
    assert Profile(width=10.0).tail_fraction(g) > 0.1
    with pytest.raises(ValueError):
        Profile("square")
    with pytest.raises(ValueError):
        Profile(width=0.0)


def test_decay_exponent_formula():
    assert heat_decay_exponent(0.5, 1, 1, 2) == -3.0
    assert math.isclose(heat_decay_exponent(1.5, 1, 1, np.inf), -4 / 3)
    assert heat_decay_exponent(2.0, 0, 2, 2) == 0.0


def test_norm_spec():
    n = NormSpec(r=np.inf)
    assert n.label == "d|Linf"
    assert math.isclose(n.self_similar_exponent(1.5), -4 / 3)
    assert math.isclose(n.theory_exponent(1.5, 1.0, "grad_f"), -2 / 3)
    assert NormSpec("mean").self_similar_exponent(1.0) == 0.0
    with pytest.raises(ValueError):
        NormSpec("max")
    with pytest.raises(ValueError):
        NormSpec(r=0.5)


def test_mean_norm_kind(line128):
    f = transform(Field(line128, np.full(128, 3.0)))
    assert math.isclose(NormSpec("mean").evaluate(f), 3.0, rel_tol=1e-14)


def test_decay_scan_classical_rate():
    # alpha = 2: ||d K(t) f||_2 ~ t^(-3/4) exactly once the width forgets w
    g = Grid1D(4096, 2 * math.pi * 50)
    times = np.geomspace(20.0, (g.L / 10) ** 2, 25)
    scan = decay_scan(Profile(), 2.0, NormSpec(r=2.0), times, g, q=1.5, young=True)
    assert scan.conclusive
    assert abs(scan.slope + 0.75) < 0.01
    assert scan.envelope_ok and scan.young_ok


def test_decay_scan_gaussian_closed_form_values():
    g = Grid1D(4096, 2 * math.pi * 50)
    times = np.array([1.0, 4.0, 9.0])
    scan = decay_scan(Profile(), 2.0, NormSpec(r=2.0), times, g)
    # ||d G_sigma||_2 with G = exp(-x^2 / 2 sigma^2) / sigma is
    # sqrt(sqrt(pi) / 2) sigma^(-3/2)
    sig = np.sqrt(1 + 2 * times)
    ref = math.sqrt(math.sqrt(math.pi) / 2) * sig**-1.5
    assert np.allclose(scan.values, ref, rtol=1e-10)


def test_decay_scan_flags_invalid_window():
    g = Grid1D(1024, 2 * math.pi * 10)
    times = np.geomspace(1.0, 1e4, 10)
    scan = decay_scan(Profile(), 1.0, NormSpec(r=2.0), times, g)
    assert not scan.conclusive
    assert scan.summary()["validity"] is False
    assert not scan.valid[-1] and scan.valid[0]


def test_decay_scan_rejects_bad_times(line128):
    with pytest.raises(ValueError):
        decay_scan(Profile(), 1.0, NormSpec(), [1.0], line128)
    with pytest.raises(ValueError):
        decay_scan(Profile(), 1.0, NormSpec(), [2.0, 1.0], line128)
    with pytest.raises(ValueError):
        decay_scan(Profile(), 3.0, NormSpec(), [1.0, 2.0], line128)


def test_decay_scan_writers(tmp_path):
    g = Grid1D(1024, 2 * math.pi * 10)
    scan = decay_scan(Profile(), 1.0, NormSpec(r=2.0), np.geomspace(1, 5, 6), g)
    csv_path = scan.write_csv(tmp_path / "d.csv")
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "t,value,envelope,valid" and len(lines) == 7
    data = json.loads(scan.write_json(tmp_path / "d.json").read_text())
    assert data["conclusive"] is True and "slope" in data


def test_young_envelope_bounds_every_value():
    g = Grid1D(4096, 2 * math.pi * 50)
    times = np.geomspace(0.5, 30, 12)
    for q in (1.0, 1.5, 2.0):
        scan = decay_scan(Profile(), 1.5, NormSpec(r=np.inf), times, g, q=q, young=True)
        assert scan.young_ok
