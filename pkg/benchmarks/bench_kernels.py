"""Compare the compiled and pure-numpy jet kernels.

Usage: ``python benchmarks/bench_kernels.py [--points 20000] [--repeat 5]``
"""

import argparse
import timeit

import numpy as np

from quadcurl import kernels
from quadcurl.fields import _layout, example_solution


def available_backends():
    names = ["python"]
    try:
        from quadcurl import _jetkernels  # noqa: F401
    except ImportError:
        pass
    else:
        names.insert(0, "compiled")
    return names


def cases(n_points, seed=0):
    rng = np.random.default_rng(seed)
    _, _, (tg, lf, rt) = _layout(4)
    ncoef = int(tg.max()) + 1
    a = rng.normal(size=(n_points, ncoef))
    b = rng.normal(size=(n_points, ncoef))
    delta = a.copy()
    delta[:, 0] = 0.0
    series = np.ascontiguousarray(rng.normal(size=(n_points, 5)))
    pts = rng.uniform(size=(n_points // 10, 3))
    field = example_solution(1)
    return {
        "jet_mul": lambda: kernels.jet_mul(a, b, tg, lf, rt, ncoef),
        "jet_horner": lambda: kernels.jet_horner(delta, series, tg, lf, rt, ncoef),
        "curl^4 example 1": lambda: field.curl_power(4, pts),
    }


def run(n_points, repeat):
    results = {}
    reference = {}
    for backend in available_backends():
        kernels.use_backend(backend)
        for name, fn in cases(n_points).items():
            out = fn()
            if name in reference:
                err = np.max(np.abs(out - reference[name])) / np.max(np.abs(reference[name]))
                assert err < 1e-12, f"{name}: backends disagree ({err:.2e})"
            else:
                reference[name] = out
            results[(name, backend)] = min(timeit.repeat(fn, number=1, repeat=repeat))
    return results


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--points", type=int, default=20000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    initial = kernels.BACKEND
    results = run(args.points, args.repeat)
    kernels.use_backend(initial)
    backends = available_backends()
    print(f"{'case':<20}" + "".join(f"{b:>12}" for b in backends) + "     speedup")
    for name in cases(16):
        times = [results[(name, b)] for b in backends]
        speedup = f"{times[-1] / times[0]:10.1f}x" if len(times) > 1 else ""
        print(f"{name:<20}" + "".join(f"{t * 1e3:10.2f}ms" for t in times) + speedup)


if __name__ == "__main__":
    main()
