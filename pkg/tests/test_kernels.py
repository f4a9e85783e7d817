import os
import subprocess
import sys

import numpy as np
import pytest

from dipm import kernels

BACKENDS = kernels.available_backends()


def _buffers(rng, shape):
    def c():
        return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return c


@pytest.mark.parametrize("name", BACKENDS)
def test_lawson_kernels_match_formulae(name, rng):
    k = kernels.get_backend(name)
    shape = (8, 5)
    c = _buffers(rng, shape)
    A, B = rng.random(shape), rng.random(shape)
    y, kk = c(), c()
    out = np.empty_like(y)
    k.lawson_stage(A, y, 0.3, B, kk, out)
    assert np.allclose(out, A * y + 0.3 * B * kk, rtol=0, atol=1e-15)
    E, Eh = rng.random(shape), rng.random(shape)
    k1, k2, k3, k4 = c(), c(), c(), c()
    k.lawson_final(E, Eh, y, 0.2, k1, k2, k3, k4, out)
    ref = E * y + 0.2 / 6 * (E * k1 + 2 * Eh * (k2 + k3) + k4)
    assert np.allclose(out, ref, rtol=0, atol=1e-14)


@pytest.mark.parametrize("name", BACKENDS)
def test_advect_returns_max_speed_squared(name, rng):
    k = kernels.get_backend(name)
    u1, u2, d1, d2 = (rng.standard_normal((6, 4)) for _ in range(4))
    dr0 = rng.standard_normal(4)
    out = np.empty((6, 4))
    umax2 = k.advect(u1, u2, d1, d2, dr0, out)
    assert np.allclose(out, -(u1 * d1 + u2 * (d2 + dr0[None, :])), atol=1e-15)
    assert umax2 == pytest.approx(np.max(u1**2 + u2**2))


@pytest.mark.parametrize("name", BACKENDS)
def test_velocity_gradient_spectra(name, grid64, rng):
    from dipm.opcheck import random_field
    from dipm.solver import Workspace, compute_velocity

    rho = random_field(grid64, rng)
    ws = Workspace(grid64, 1.0, 2 / 3, name)
    bufs = [np.empty(grid64.spec_shape, dtype=complex) for _ in range(4)]
    ws.kern.velocity_gradient_spectra(rho.data, ws.k1, ws.k2, ws.inv_k2, ws.mask, *bufs)
    u1, u2 = compute_velocity(rho)
    assert np.allclose(bufs[0], u1.data, atol=1e-15)
    assert np.allclose(bufs[1], u2.data, atol=1e-15)
    assert np.allclose(bufs[2], 1j * grid64.k_odd(1) * rho.data, atol=1e-13)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_env_var_forces_fallback():
    env = {**os.environ, "DIPM_PURE_PYTHON": "1"}
    out = subprocess.run([sys.executable, "-c", "import dipm.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
