"""Compare the jitted kernels against the pure-numpy fallbacks.

Times the two hot paths on realistic sizes:
  - pairwise variance terms (dense 62-node neighborhoods), and
  - the exhaustive graph scan (n=7: 2^21 graphs).

Run:  python benchmarks/bench_backends.py
"""

import time

import numpy as np

from interference_lab import _kernels as K


def _bench(label, fn, *args, repeat=5):
    fn(*args)  # warm-up (triggers JIT compilation on the numba side)
    best = min(
        (lambda t0: (fn(*args), time.perf_counter() - t0))(time.perf_counter())[1]
        for _ in range(repeat)
    )
    print(f"  {label:<10} {best * 1e3:10.3f} ms")
    return best


def bench_ht_terms(n=62, seed=0):
    rng = np.random.default_rng(seed)
    masks = np.zeros(n, dtype=np.int64)
    adj = rng.random((n, n)) < 0.3
    for i in range(n):
        m = 1 << i
        for j in range(n):
            if i != j and (adj[i, j] or adj[j, i]):
                m |= 1 << j
        masks[i] = m
    y_a = rng.uniform(0.1, 1.0, n)
    y_b = rng.uniform(0.1, 1.0, n)
    print(f"pairwise variance terms, n={n}")
    results = {}
    if K.HAS_NUMBA:
        results["numba"] = K._ht_terms_nb(masks, y_a, y_b)
        _bench("numba", K._ht_terms_nb, masks, y_a, y_b)
    results["numpy"] = K._ht_terms_np(masks, y_a, y_b)
    _bench("numpy", K._ht_terms_np, masks, y_a, y_b)
    if len(results) == 2:
        gap = max(
            abs(a - b) / max(abs(a), 1e-300)
            for a, b in zip(results["numba"], results["numpy"])
        )
        print(f"  max relative disagreement: {gap:.2e}")


def bench_graph_scan(n=7, p=0.3):
    pair_i, pair_j = K._pair_index(n)
    print(f"exhaustive graph scan, n={n} ({1 << (n * (n - 1) // 2)} graphs)")
    results = {}
    if K.HAS_NUMBA:
        results["numba"] = K._er_variance_scan_nb(n, p, pair_i, pair_j)
        _bench("numba", K._er_variance_scan_nb, n, p, pair_i, pair_j, repeat=3)
    results["numpy"] = K._er_variance_scan_np(n, p)
    _bench("numpy", K._er_variance_scan_np, n, p, repeat=3)
    if len(results) == 2:
        rel = abs(results["numba"] - results["numpy"]) / abs(results["numpy"])
        print(f"  relative disagreement: {rel:.2e}")


if __name__ == "__main__":
    print(f"active backend: {K.active_backend()} (numba available: {K.HAS_NUMBA})")
    bench_ht_terms()
    bench_graph_scan()
