"""Time the compiled window sweeps against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Sizes follow the Lorenz 96 study (n=80, N=150) and the advection study
(n=40, N=50); each sweep carries a block of 20 columns, the width of a
k=15, l=5 sketch.
"""
import argparse
import timeit

import numpy as np

from wc4dvar import _pykernels, kernels


def cases():
    rng = np.random.default_rng(0)
    x0 = 8.0 + rng.standard_normal(80)
    eta = 0.1 * rng.standard_normal((150, 80))
    _, stages = _pykernels.l96_integrate(x0, eta, 0.025, 8.0)
    P = rng.standard_normal((151, 80, 20))
    A = rng.standard_normal((51, 40, 20))
    u0, ueta = rng.standard_normal(40), rng.standard_normal((50, 40))
    return {
        "l96_integrate": lambda b: b.l96_integrate(x0, eta, 0.025, 8.0),
        "l96_forward": lambda b: b.l96_forward(stages, P, 0.025),
        "l96_backward": lambda b: b.l96_backward(stages, P, 0.025),
        "advection_integrate": lambda b: b.advection_integrate(u0, ueta, 0.8),
        "advection_forward": lambda b: b.advection_forward(A, 0.8),
        "advection_backward": lambda b: b.advection_backward(A, 0.8),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = {"python": _pykernels}
    if kernels.compiled_backend is not None:
        backends["cython"] = kernels.compiled_backend
    else:
        print("compiled kernels not built; timing the numpy fallback only")
    print(f"{'kernel':<22}" + "".join(f"{b + ' [ms]':>14}" for b in backends) + f"{'speedup':>10}")
    for name, fn in cases().items():
        times = {}
        for bname, mod in backends.items():
            number = 3
            best = min(timeit.repeat(lambda: fn(mod), number=number, repeat=args.repeat))
            times[bname] = 1e3 * best / number
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{name:<22}" + "".join(f"{t:>14.3f}" for t in times.values()) + f"{speed:>10.1f}")


if __name__ == "__main__":
    main()
