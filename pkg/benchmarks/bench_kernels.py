"""Wall time of the circle-simulator step kernels, numba versus pure numpy.

    python benchmarks/bench_kernels.py [--steps N] [--K 32,64,128]

Both variants are called directly, so the DOI_EL_DISABLE_NUMBA flag does not
matter here.  Results are checked for agreement before timing.
"""

import argparse
import time

import numpy as np

from doi_el import _accel, _kernels
from doi_el.kinetic import OrientationState


def setup(K, eps=1e-3, w=-0.5, dt=None):
    dt = eps / 16 if dt is None else dt
    m = np.arange(K + 1)
    L = -4.0 * m**2 / eps + 2j * w * m
    f = OrientationState.random(np.random.default_rng(0), K, amplitude=0.5).coeffs
    return f, L, dt, 8.0 / eps, 0.5 * (0.0 - 0.5j)


def best_of(fn, repeat=3):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--K", default="32,64,128")
    args = ap.parse_args()
    if not _accel.HAS_NUMBA:
        print("numba is not installed; only the numpy path is available")
    print(f"{'kernel':<8}{'K':>5}{'steps':>8}{'numpy s':>11}{'numba s':>11}{'speedup':>9}{'max diff':>11}")
    for K in (int(k) for k in args.K.split(",")):
        f, L, dt, a_eps, shift = setup(K)
        c2 = _kernels.etd_coefficients(L, dt)
        c4 = _kernels.etd4_coefficients(L, dt)
        cases = {
            "etd2": (lambda: _kernels.etd2_numpy(f, args.steps, *c2, a_eps, shift),
                     lambda: _kernels.etd2_numba(f, args.steps, *c2, a_eps, shift)),
            "etd4": (lambda: _kernels.etd4_numpy(f, args.steps, c4, a_eps, shift),
                     lambda: _kernels.etd4_numba(f, args.steps, c4, a_eps, shift)),
        }
        for name, (slow, fast) in cases.items():
            ref = slow()[0]
            t_np = best_of(slow)
            if _accel.HAS_NUMBA:
                diff = np.abs(fast()[0] - ref).max()  # also triggers compilation
                t_nb = best_of(fast)
                print(f"{name:<8}{K:>5}{args.steps:>8}{t_np:>11.3f}{t_nb:>11.3f}"
                      f"{t_np / t_nb:>8.1f}x{diff:>11.1e}")
            else:
                print(f"{name:<8}{K:>5}{args.steps:>8}{t_np:>11.3f}{'-':>11}{'-':>9}{'-':>11}")


if __name__ == "__main__":
    main()
