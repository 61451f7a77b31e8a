"""Benchmark the compiled oracle kernel against the pure-Python fallback.

Usage: python bench/bench_vmo.py [n_frames] [dim] [n_thetas]

Builds oracles over random walk frames at a range of thresholds with both
backends and prints per-backend wall time plus the speedup. The structures
are also cross-checked so a mismatch fails loudly rather than producing a
pretty but meaningless table.
"""

from __future__ import annotations

import sys
import time

import numpy as np

from midyn.vmo import _pure, default_threshold_candidates

try:
    from midyn.vmo import _kernel
except ImportError:
    _kernel = None


def make_frames(n: int, dim: int, seed: int = 7) -> np.ndarray:
    # random walk with occasional resets: produces genuine repeats
    rng = np.random.default_rng(seed)
    steps = rng.normal(0, 0.3, size=(n, dim))
    reset = rng.random(n) < 0.05
    frames = np.empty((n, dim))
    pos = np.zeros(dim)
    for i in range(n):
        pos = np.zeros(dim) if reset[i] else pos + steps[i]
        frames[i] = pos
    return np.ascontiguousarray(frames)


def run(backend, frames: np.ndarray, thetas) -> tuple[float, list]:
    t0 = time.perf_counter()
    results = [backend.build_arrays(frames, float(th)) for th in thetas]
    return time.perf_counter() - t0, results


def main() -> int:
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 1500
    dim = int(sys.argv[2]) if len(sys.argv) > 2 else 24
    n_thetas = int(sys.argv[3]) if len(sys.argv) > 3 else 16

    frames = make_frames(n, dim)
    thetas = default_threshold_candidates(frames, n_candidates=n_thetas)
    print(f"frames={n} dim={dim} thresholds={len(thetas)}")

    pure_time, pure_results = run(_pure, frames, thetas)
    print(f"pure     {pure_time:8.3f} s")
    if _kernel is None:
        print("compiled kernel not built; nothing to compare")
        return 0

    kern_time, kern_results = run(_kernel, frames, thetas)
    print(f"compiled {kern_time:8.3f} s")
    print(f"speedup  {pure_time / kern_time:8.1f}x")

    for th, (ps, pl, pb, pt), (ks, kl, kb, kt) in zip(thetas, pure_results,
                                                      kern_results):
        same = (np.array_equal(ps, ks) and np.array_equal(pl, kl)
                and np.array_equal(pb, kb) and pt == kt)
        if not same:
            print(f"BACKEND MISMATCH at theta={th}")
            return 1
    print("backends agree on all structures")
    return 0


if __name__ == "__main__":
    sys.exit(main())
