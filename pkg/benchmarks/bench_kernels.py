"""Time the numba and pure-numpy variants of each hot kernel.

    python benchmarks/bench_kernels.py [--n 64] [--repeat 5]

The compiled variants are warmed up once before timing, so JIT compile time
is excluded.  Both variants are checked to agree before they are timed.
"""
import argparse
import time

import numpy as np

from sgspin import _accel, kernels


def _best(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(n, rng):
    hw = np.array([1.5, 1.5, 1.5])
    nhat = np.array([0.6, 0.0, 0.8])
    b_grad = np.array([[0.0, 0, 0.2], [0, 0, 0], [0.2, 0, -0.2]])
    vec = rng.standard_normal((3, n, n, n))
    psi = rng.standard_normal((4, n, n, n)) + 1j * rng.standard_normal((4, n, n, n))
    chi = psi[:2].copy()
    h = np.full(3, 2 * hw[0] / n)
    return {
        "ball_quadrature": lambda use: kernels.ball_quadrature(
            (n, n, n), hw, np.zeros(3), 1.0, nhat, (0, 0, 250.0), b_grad, use_numba=use),
        "divergence": lambda use: kernels.divergence(vec, h, use_numba=use),
        "curl": lambda use: kernels.curl(vec, h, use_numba=use),
        "dirac_bilinears": lambda use: kernels.dirac_bilinears(psi, use_numba=use),
        "spin_rotate": lambda use: kernels.spin_rotate(chi, vec, 0.3, use_numba=use),
    }


def _flatten(out):
    if isinstance(out, tuple):
        return np.concatenate([np.ravel(o) for o in out])
    return np.ravel(out)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=64, help="grid nodes per axis")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not _accel.HAVE_NUMBA:
        print("numba is not importable; only the numpy path exists")
        return 1
    rng = np.random.default_rng(0)
    print(f"grid {args.n}^3, best of {args.repeat}")
    print(f"{'kernel':<18}{'numpy [ms]':>12}{'numba [ms]':>12}{'speed-up':>10}")
    for name, fn in cases(args.n, rng).items():
        a, b = _flatten(fn(True)), _flatten(fn(False))  # also warms up the JIT
        if not np.allclose(a, b, rtol=1e-10, atol=1e-12 * np.max(np.abs(b))):
            raise SystemExit(f"{name}: numba and numpy results disagree")
        t_np = _best(lambda: fn(False), args.repeat)
        t_nb = _best(lambda: fn(True), args.repeat)
        print(f"{name:<18}{1e3 * t_np:>12.2f}{1e3 * t_nb:>12.2f}{t_np / t_nb:>10.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
