"""Compare the compiled kernels with the pure-numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--trials 1000000]

Reports the best-of-N wall time of each kernel under both backends and
checks that both return the same result.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from decoyforge import _kernels_py, relay

try:
    from decoyforge import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None


def _cases(trials: int):
    ca, cb = relay.input_modes(relay.polarization("X", 0), relay.polarization("X", 1))
    rng = np.random.default_rng(0)
    arrived = rng.binomial(rng.poisson(0.5, trials), 0.01).astype(np.int64)
    u_dark, u_err = rng.random(trials), rng.random(trials)
    u = rng.random((trials, 12))

    def fock(impl):
        return [impl.fock_lit_distribution(j, k, ca, cb) for j in range(7) for k in range(7)]

    return {
        "fock_lit_distribution (7x7 inputs)": fock,
        f"bb84_trials ({trials} pulses)": lambda impl: impl.bb84_trials(arrived, u_dark, u_err, 3e-6, 0.015, 0.5),
        f"mdi_z_single_trials ({trials} pairs)": lambda impl: impl.mdi_z_single_trials(u, 0.1, 0.015, 3e-6),
    }


def _same(a, b) -> bool:
    if isinstance(a, list):
        return all(np.allclose(x, y, rtol=1e-12, atol=1e-15) for x, y in zip(a, b))
    return a == b


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--trials", type=int, default=1_000_000)
    args = parser.parse_args(argv)
    if _compiled is None:
        print("compiled extension not available; build it with `pip install -e . --no-build-isolation`")
        return 1
    print(f"{'kernel':<42}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}  agree")
    for name, fn in _cases(args.trials).items():
        t_py = min(timeit.repeat(lambda: fn(_kernels_py), number=1, repeat=args.repeat))
        t_cy = min(timeit.repeat(lambda: fn(_compiled), number=1, repeat=args.repeat))
        agree = _same(fn(_kernels_py), fn(_compiled))
        print(f"{name:<42}{t_py:>12.4f}{t_cy:>12.4f}{t_py / t_cy:>9.1f}x  {agree}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
