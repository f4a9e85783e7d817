"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--sizes 128 256] [--repeat 20]

Times each fused kernel in isolation and a full Lawson RK4 step, and checks
that both backends produce bit-identical steps.
"""
import argparse
import json
import time

import numpy as np

from dipm import kernels, solver
from dipm.params import ParamSet


def _best(fn, repeat):
    fn()  # warm caches
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_size(n, repeat, alpha):
    p = ParamSet(alpha=alpha, n1=n, n2=n, epsilon=1e-2)
    st = solver.initial_state(p)
    rows, finals = {}, {}
    for name in kernels.available_backends():
        k = kernels.get_backend(name)
        ws = solver.Workspace(st.grid, alpha, p.dealias, name)
        y = st.rho1.data
        dr0 = ws.background_gradient(st.rho0.data)
        u1, u2, d1, d2 = (a.copy() for a in ws.fields(y))
        real_out = np.empty(st.grid.shape)
        spec_out = np.empty_like(y)
        E, Eh = ws.propagators(1e-2)
        bufs = [np.empty_like(y) for _ in range(4)]
        r = {
            "velocity_gradient_spectra": _best(lambda: k.velocity_gradient_spectra(
                y, ws.k1, ws.k2, ws.inv_k2, ws.mask, *bufs), repeat),
            "advect": _best(lambda: k.advect(u1, u2, d1, d2, dr0, real_out), repeat),
            "lawson_stage": _best(lambda: k.lawson_stage(Eh, y, 5e-3, Eh, y, spec_out), repeat),
            "lawson_final": _best(lambda: k.lawson_final(E, Eh, y, 1e-2, y, y, y, y, spec_out),
                                  repeat),
            "step": _best(lambda: solver._lawson_step(ws, y, st.rho0.data, alpha, 1e-2), repeat),
        }
        finals[name] = solver._lawson_step(ws, y, st.rho0.data, alpha, 1e-2)[0]
        rows[name] = r
    identical = None
    if len(finals) == 2:
        identical = bool(np.array_equal(finals["python"], finals["compiled"]))
    return rows, identical


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[128, 256])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--alpha", type=float, default=1.5)
    ap.add_argument("--json", metavar="PATH", help="also write results as JSON")
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    print(f"backends: {', '.join(backends)} (active: {kernels.BACKEND})")
    results = {}
    for n in args.sizes:
        rows, identical = bench_size(n, args.repeat, args.alpha)
        results[n] = {"timings": rows, "bit_identical": identical}
        print(f"\n{n}x{n}  (best of {args.repeat}, milliseconds)")
        print(f"{'kernel':28s}" + "".join(f"{b:>12s}" for b in backends)
              + ("     speedup" if len(backends) == 2 else ""))
        for kname in rows[backends[0]]:
            vals = [rows[b][kname] * 1e3 for b in backends]
            line = f"{kname:28s}" + "".join(f"{v:12.3f}" for v in vals)
            if len(vals) == 2:
                line += f"{vals[0] / vals[1]:11.2f}x"
            print(line)
        if identical is not None:
            print(f"steps bit-identical across backends: {identical}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2)


if __name__ == "__main__":
    main()
