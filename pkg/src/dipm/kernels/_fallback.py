"""Pure numpy versions of the hot loops.

Signatures and semantics match ``_ckernels.pyx`` exactly; outputs are written
into caller-provided arrays.
"""
import numpy as np


def velocity_gradient_spectra(rho_hat, k1, k2, inv_k2, mask, u1h, u2h, d1h, d2h):
    """Dealiased velocity and gradient spectra of a density spectrum.

    ``k1``/``k2`` are odd-safe wavenumber vectors (length ``n1`` and
    ``n2//2+1``), ``inv_k2`` holds ``1/|xi|^2`` with 0 at the origin.
    """
    m = rho_hat * mask
    K1 = k1[:, None]
    K2 = k2[None, :]
    np.multiply(m, K1 * K2 * inv_k2, out=u1h)
    np.multiply(m, -(K1 * K1) * inv_k2, out=u2h)
    np.multiply(m, 1j * K1, out=d1h)
    np.multiply(m, 1j * K2, out=d2h)


def advect(u1, u2, d1, d2, dr0, out):
    """``out = -(u1 d1 + u2 (d2 + dr0))`` with ``dr0`` broadcast along x1.

    Returns ``max(u1^2 + u2^2)`` for the CFL check.
    """
    np.add(d2, dr0[None, :], out=out)
    out *= u2
    out += u1 * d1
    np.negative(out, out=out)
    return float(np.max(u1 * u1 + u2 * u2))


def lawson_stage(A, y, c, B, k, out):
    """``out = A y + c (B k)``; one stage of the Lawson RK4 update."""
    tmp = k * B
    tmp *= c
    np.multiply(y, A, out=out)
    out += tmp


def lawson_final(E, Eh, y, h, k1, k2, k3, k4, out):
    """``out = E (y + h/6 k1) + h/6 (2 Eh (k2 + k3) + k4)``."""
    c = h / 6.0
    tmp = k2 + k3
    tmp *= Eh
    tmp *= 2.0
    tmp += k4
    tmp *= c
    np.multiply(k1, c, out=out)
    out += y
    out *= E
    out += tmp
