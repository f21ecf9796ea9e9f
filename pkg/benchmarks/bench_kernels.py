"""Compare the compiled kernels with the NumPy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Each kernel runs on identical inputs under both backends; the script checks
the outputs agree before reporting timings.
"""

import argparse
import timeit

import numpy as np

from behinv import _kernels


def _cases(rng):
    c = np.ascontiguousarray
    n, m, p = 8, 2, 3
    A = rng.normal(size=(n, n))
    A *= 0.9 / np.max(np.abs(np.linalg.eigvals(A)))
    u = rng.uniform(-1, 1, size=(20_000, m))
    sim_args = (A, rng.normal(size=(n, m)), rng.normal(size=(p, n)), np.zeros((p, m)), np.zeros(n), u)

    hank_args = (rng.uniform(-1, 1, size=(5_000, 3)), 40)

    nw, nv = 40, 12
    F = rng.normal(size=(nv, nw))
    M = rng.normal(size=(30, nw))
    P = np.linalg.pinv(2 * M.T @ M + F.T @ F)
    w0 = c(2 * P @ (M.T @ rng.normal(size=30)))
    admm_args = (w0, c(P @ F.T), c(F), rng.normal(size=nv), -0.2 * np.ones(nv), 0.2 * np.ones(nv), 1.0, 5_000, 0.0)
    return {"simulate_lti": sim_args, "block_hankel": hank_args, "admm_box": admm_args}


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return np.allclose(a, b, rtol=1e-9, atol=1e-9)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if _kernels.compiled is None:
        print("compiled extension not built; only the fallback is available")
    backends = {"python": _kernels.fallback}
    if _kernels.compiled is not None:
        backends["cython"] = _kernels.compiled
    cases = _cases(np.random.default_rng(0))
    print(f"{'kernel':<14}" + "".join(f"{name:>14}" for name in backends) + f"{'speedup':>10}")
    for kernel, kargs in cases.items():
        outs, times = {}, {}
        for name, mod in backends.items():
            fn = getattr(mod, kernel)
            outs[name] = fn(*kargs)
            times[name] = min(timeit.repeat(lambda: fn(*kargs), number=1, repeat=args.repeat))
        if len(outs) == 2 and not _same(outs["python"], outs["cython"]):
            raise SystemExit(f"{kernel}: backends disagree")
        row = f"{kernel:<14}" + "".join(f"{times[n] * 1e3:>12.2f}ms" for n in backends)
        if "cython" in times:
            row += f"{times['python'] / times['cython']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
