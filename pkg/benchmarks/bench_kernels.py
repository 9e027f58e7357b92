"""Time the compiled and pure-Python integration kernels side by side.

Run ``python3 benchmarks/bench_kernels.py`` after an editable install.
"""
import argparse
import time

import numpy as np

from fermimirror import kernels
from fermimirror.stability import drift


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def rk4_case(mod, steps):
    y0 = np.array([0.1, -0.2, 1.5, 0.3])
    out = np.zeros((steps // 10 + 1, 4))
    return lambda: mod.rk4_meanfield(y0, 1.3, 0.2, 2.0, 1.0, 2.5, 1e-3, steps, 10, out)


def em_case(mod, steps, members):
    J = drift(1.2, 0.8, 1.0, 0.1, 1.0)
    B = np.zeros((4, 2))
    B[2:, :] = np.sqrt(2.0) * np.eye(2)
    normals = np.random.default_rng(0).standard_normal((members, steps, 2))
    out = np.zeros((members, steps // 4 + 1, 4))

    def call():
        X = np.zeros((members, 4))
        mod.em_linear(J, B, X, 1e-3, normals, 4, out)
    return call


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--members", type=int, default=16)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    names = [n for n in ("python", "cython") if n in kernels.BACKENDS]
    if "cython" not in names:
        print("compiled kernels not built; only the Python backend is timed")
    rows = []
    for label, make in (("rk4_meanfield", lambda m: rk4_case(m, args.steps)),
                        ("em_linear", lambda m: em_case(m, args.steps, args.members))):
        t = {n: best_of(make(kernels.get(n)), args.repeat) for n in names}
        rows.append((label, t))

    print(f"{'kernel':<16}" + "".join(f"{n:>12}" for n in names) + f"{'speedup':>10}")
    for label, t in rows:
        line = f"{label:<16}" + "".join(f"{t[n]:>11.4f}s" for n in names)
        if len(names) == 2:
            line += f"{t['python'] / t['cython']:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
