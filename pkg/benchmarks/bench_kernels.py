"""Timing comparison of the compiled kernels against the numpy reference.

Runs each hot kernel with both backends on identical inputs and prints
per-call times plus the speedup.  The compiled extension is optional;
missing it is reported, not an error.

    python3 benchmarks/bench_kernels.py --d 64 --history 256 --repeat 2000
"""

import argparse
import time

import numpy as np

from relclock.kernels import _ref

try:
    from relclock.kernels import _ckernels
except ImportError:
    _ckernels = None


def _time(fn, args, repeat):
    best = float("inf")
    for _ in range(5):
        t0 = time.perf_counter()
        for _ in range(repeat):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / repeat)
    return best


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d", type=int, default=64, help="clock dimension")
    ap.add_argument("--history", type=int, default=256,
                    help="stored past nodes for the memory kernel")
    ap.add_argument("--repeat", type=int, default=2000)
    args = ap.parse_args()

    d, n = args.d, args.history
    rng = np.random.default_rng(7)
    kernels = rng.standard_normal((n, 4, 4)) + 1j * rng.standard_normal((n, 4, 4))
    gaps = rng.standard_normal((4, 4))
    us = np.linspace(0.0, 2.0, n)
    weights = np.full(n, 1.0 / n)

    cases = [
        ("window_amplitudes", (d, d / 2 + 0.25, np.sqrt(d), (d - 1) / 2)),
        ("window_derivative", (d, d / 2 + 0.25, np.sqrt(d), (d - 1) / 2)),
        ("memory_accumulate", (kernels, gaps, us, weights)),
    ]

    print(f"d={d} history={n} repeat={args.repeat}")
    if _ckernels is None:
        print("compiled extension not built; timing the reference only")
    header = f"{'kernel':<20} {'reference':>12} {'compiled':>12} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name, call_args in cases:
        t_ref = _time(getattr(_ref, name), call_args, args.repeat)
        if _ckernels is None:
            print(f"{name:<20} {t_ref * 1e6:>10.2f}us {'-':>12} {'-':>9}")
            continue
        t_c = _time(getattr(_ckernels, name), call_args, args.repeat)
        out_ref = getattr(_ref, name)(*call_args)
        out_c = getattr(_ckernels, name)(*call_args)
        if not np.allclose(np.asarray(out_ref), np.asarray(out_c), atol=1e-14):
            raise SystemExit(f"{name}: backends disagree")
        print(
            f"{name:<20} {t_ref * 1e6:>10.2f}us {t_c * 1e6:>10.2f}us "
            f"{t_ref / t_c:>8.2f}x"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
