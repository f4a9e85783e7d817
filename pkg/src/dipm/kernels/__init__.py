"""Hot-loop kernels with a compiled core and a numpy fallback.

The compiled extension is used when it imports; set ``DIPM_PURE_PYTHON=1``
to force the fallback.  ``BACKEND`` names the active implementation and
:func:`get_backend` returns either one explicitly (benchmarks and tests).
"""
import os
from types import SimpleNamespace

import numpy as np

from . import _fallback

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_NAMES = ("velocity_gradient_spectra", "advect", "lawson_stage", "lawson_final")


def _flat(a):
    # interleaved re/im view; raises if the array is not contiguous
    return a.reshape(-1).view(np.float64)


def _wrap_compiled(mod):
    def lawson_stage(A, y, c, B, k, out):
        mod.lawson_stage(A.reshape(-1), _flat(y), float(c), B.reshape(-1), _flat(k),
                         _flat(out))

    def lawson_final(E, Eh, y, h, k1, k2, k3, k4, out):
        mod.lawson_final(E.reshape(-1), Eh.reshape(-1), _flat(y), float(h),
                         _flat(k1), _flat(k2), _flat(k3), _flat(k4), _flat(out))

    def velocity_gradient_spectra(rho_hat, k1, k2, inv_k2, mask, u1h, u2h, d1h, d2h):
        v = [a.view(np.float64) for a in (rho_hat, u1h, u2h, d1h, d2h)]
        mod.velocity_gradient_spectra(v[0], k1, k2, inv_k2, mask.view(np.uint8),
                                      v[1], v[2], v[3], v[4])

    return SimpleNamespace(
        name="compiled",
        velocity_gradient_spectra=velocity_gradient_spectra,
        advect=mod.advect,
        lawson_stage=lawson_stage,
        lawson_final=lawson_final,
    )


_python = SimpleNamespace(name="python", **{n: getattr(_fallback, n) for n in _NAMES})
_compiled = _wrap_compiled(_ckernels) if _ckernels is not None else None


def available_backends():
    return ["python"] + (["compiled"] if _compiled is not None else [])


def get_backend(name=None):
    if name is None:
        return _active
    if name == "python":
        return _python
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown kernel backend {name!r}")


if os.environ.get("DIPM_PURE_PYTHON") or _compiled is None:
    _active = _python
else:
    _active = _compiled

BACKEND = _active.name
