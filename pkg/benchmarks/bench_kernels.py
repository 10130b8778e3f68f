"""Benchmark: compiled training kernel vs the NumPy fallback.

Times the fused per-batch training step (forward + backward + Adam) for
both kernels across layer profiles, plus one end-to-end network fit.
The compiled kernel pays off where per-call overhead dominates, i.e. at
the desk-scale widths the imputation loop uses; at full-profile widths
the work is BLAS-bound and the two kernels converge.

Run:  python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from codaimp.kernels import numpy_kernel

try:
    from codaimp.kernels import _fastnet
except ImportError:
    _fastnet = None

PROFILES = {
    "tiny (5 -> 16/8)": ([5, 16, 8, 1], 32),
    "desk (9 -> 64/48/32)": ([9, 64, 48, 32, 1], 32),
    "wide (9 -> 256/128)": ([9, 256, 128, 1], 32),
    "full-ish (9 -> 1000/900)": ([9, 1000, 900, 1], 32),
}


def make_state(sizes, rng):
    weights = [
        np.ascontiguousarray(rng.standard_normal((o, i)) * 0.1)
        for i, o in zip(sizes[:-1], sizes[1:])
    ]
    biases = [np.zeros(o) for o in sizes[1:]]
    m_w = [np.zeros_like(w) for w in weights]
    v_w = [np.zeros_like(w) for w in weights]
    m_b = [np.zeros_like(b) for b in biases]
    v_b = [np.zeros_like(b) for b in biases]
    return weights, biases, m_w, v_w, m_b, v_b


def time_kernel(kernel, sizes, batch, repeats=400, dropout=0.1):
    rng = np.random.default_rng(0)
    state = make_state(sizes, rng)
    x = np.ascontiguousarray(rng.standard_normal((batch, sizes[0])))
    y = np.ascontiguousarray(rng.standard_normal(batch))
    masks = [
        np.ascontiguousarray((rng.random((batch, w)) >= dropout) / (1 - dropout))
        for w in sizes[1:-1]
    ]
    # Warm up, then time.
    for step in range(1, 6):
        kernel.train_batch(*state, x, y, masks, step, 1e-3, 0.9, 0.999, 1e-8, True)
    start = time.perf_counter()
    for step in range(6, repeats + 6):
        kernel.train_batch(*state, x, y, masks, step, 1e-3, 0.9, 0.999, 1e-8, True)
    return (time.perf_counter() - start) / repeats


def bench_steps():
    print(f"{'profile':28s} {'numpy':>12s} {'cython':>12s} {'speedup':>8s}")
    for name, (sizes, batch) in PROFILES.items():
        repeats = 400 if sizes[1] <= 256 else 40
        t_np = time_kernel(numpy_kernel, sizes, batch, repeats)
        if _fastnet is None:
            print(f"{name:28s} {t_np * 1e6:10.1f}us {'n/a':>12s} {'n/a':>8s}")
            continue
        t_cy = time_kernel(_fastnet, sizes, batch, repeats)
        print(
            f"{name:28s} {t_np * 1e6:10.1f}us {t_cy * 1e6:10.1f}us "
            f"{t_np / t_cy:7.2f}x"
        )


def bench_fit():
    from codaimp.network import AdamParams, NetworkConfig, fit_new

    rng = np.random.default_rng(1)
    X = rng.standard_normal((285, 9))
    y = X @ rng.standard_normal(9) + 0.1 * rng.standard_normal(285)
    cfg = NetworkConfig.desk_profile(rng_seed=0, adam=AdamParams(lr=0.001))
    start = time.perf_counter()
    fit_new(X, y, cfg)
    elapsed = time.perf_counter() - start
    from codaimp import kernels

    print(
        f"\nend-to-end desk-profile fit (285 x 9, {cfg.epochs} epochs max, "
        f"kernel={kernels.KERNEL_NAME}): {elapsed:.2f}s"
    )
    print("(set CODAIMP_KERNEL=numpy and rerun to compare the fallback)")


if __name__ == "__main__":
    if _fastnet is None:
        print("compiled kernel not available; timing the NumPy kernel only\n")
    bench_steps()
    bench_fit()
