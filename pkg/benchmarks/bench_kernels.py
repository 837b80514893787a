"""Compare the numba and pure-numpy implementations of each hot kernel.

    python benchmarks/bench_kernels.py [--repeat N]

Numba is warmed up before timing, so compile cost is excluded (it is printed
separately).  Requires numba to be importable and SFMVAL_DISABLE_NUMBA unset.
"""
import argparse
import time
import timeit

import numpy as np

from sfmval import _kernels as k
from sfmval import alignment, geometry, synth


def _cases():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(4, 4))
    sym = np.ascontiguousarray(a + a.T)
    q = rng.normal(size=(200_000, 4))
    rots = np.ascontiguousarray(geometry.quats_to_rotmats(q))
    params = synth.CircuitParams()
    table = synth._path_table(synth._circuit_pieces(params.extent_x, params.extent_y, params.corner_radius))
    total = synth.circuit_length(params)
    n = params.n_frames
    return [
        ("jacobi 4x4 (one call)", k.jacobi_sym_py, k.jacobi_sym_nb, (sym, 1e-13, 100), 2000),
        ("rotmat->quat x200k", k.rotmats_to_quats_py, k.rotmats_to_quats_nb, (rots,), 5),
        ("chord march 3000 frames", k.march_chords_py, k.march_chords_nb, (table, total, total / n, n, 1e-13, 50), 5),
    ]


def _horn_case():
    rng = np.random.default_rng(1)
    xs = rng.normal(size=(3000, 3))
    ys = 2.0 * xs + 1.0
    return lambda: alignment.horn_align(xs, ys)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not k.HAVE_NUMBA:
        raise SystemExit("numba unavailable (or SFMVAL_DISABLE_NUMBA set); nothing to compare")

    print(f"{'kernel':<28} {'numpy/py':>12} {'numba':>12} {'speedup':>9} {'compile':>9}")
    for name, py, nb, argv, number in _cases():
        t0 = time.perf_counter()
        nb(*argv)  # compile or load from cache
        warm = time.perf_counter() - t0
        t_py = min(timeit.repeat(lambda: py(*argv), number=number, repeat=args.repeat)) / number
        t_nb = min(timeit.repeat(lambda: nb(*argv), number=number, repeat=args.repeat)) / number
        print(f"{name:<28} {t_py * 1e3:>10.4f}ms {t_nb * 1e3:>10.4f}ms {t_py / t_nb:>8.1f}x {warm:>8.2f}s")

    horn = _horn_case()
    t = min(timeit.repeat(horn, number=200, repeat=args.repeat)) / 200
    print(f"\nhorn_align, 3000 pairs, active backend {k.backend()}: {t * 1e3:.3f} ms")


if __name__ == "__main__":
    main()
