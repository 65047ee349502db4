"""Compare the compiled and NumPy kernel backends on workloads from the package.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Each case is timed on both backends (best of ``--repeat``), and the outputs
are checked to agree before timings are reported.
"""
import argparse
import time

import numpy as np

from quantum_reliability import flipcode as fc
from quantum_reliability.apparatus import g_table_vectors
from quantum_reliability.dynamics import propagator
from quantum_reliability.histories import survival_map
from quantum_reliability.numkernel import ket_projector, vec
from quantum_reliability._kernels import _pyimpl

try:
    from quantum_reliability._kernels import _cimpl
except ImportError:
    _cimpl = None


def cases():
    """(name, kernel name, args) built from the bit-flip example."""
    params = fc.CodeParams(0.8, 0.2)
    model, e, psi = fc.logical_setup(params)
    step = propagator(model, 1e-3)
    s = survival_map(step, e)
    rho0 = vec(ket_projector(psi))
    out = [
        ("survival curve, 8-dim code, 5000 checks", "iterate_map", (s, rho0, 5000)),
        ("survival curve, 8-dim code, 20000 checks", "iterate_map", (s, rho0, 20000)),
    ]
    step = propagator(model, 0.01)
    for f in (200, 800):
        r, u = g_table_vectors(step, e, psi, f)
        out.append((f"record matrix, 8-dim code, {f} checks", "toeplitz_bilinear", (u[:-1] - u[1:], r)))
    rng = np.random.default_rng(1)
    a = rng.normal(size=(200, 4)) + 1j * rng.normal(size=(200, 4))
    b = rng.normal(size=(200, 4)) + 1j * rng.normal(size=(200, 4))
    out.append(("continuous kernel, 200-point grid", "toeplitz_bilinear", (a, b)))
    return out


def best_of(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times), result


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if _cimpl is None:
        print("compiled kernels are not built; only the NumPy backend is timed")
    print(f"{'case':45s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s}")
    for name, kernel, kargs in cases():
        t_py, ref = best_of(getattr(_pyimpl, kernel), kargs, args.repeat)
        if _cimpl is None:
            print(f"{name:45s} {t_py:11.4f} {'-':>11s} {'-':>8s}")
            continue
        t_c, got = best_of(getattr(_cimpl, kernel), kargs, args.repeat)
        scale = max(1.0, float(np.max(np.abs(ref))))
        if np.max(np.abs(got - ref)) > 1e-10 * scale:
            raise SystemExit(f"backends disagree on {name!r}")
        print(f"{name:45s} {t_py:11.4f} {t_c:11.4f} {t_py / t_c:7.1f}x")


if __name__ == "__main__":
    main()
