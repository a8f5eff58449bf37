"""Compare the compiled twisted-marginal kernel with the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--grid-n 65] [--repeat 3] [--N 3 9 15]

Both backends run on identical N00N inputs; the table reports the best
wall time per backend, the speed-up and the largest absolute difference
between the two outputs.
"""

import argparse
import time

import numpy as np

from wehrl_witness import _backend
from wehrl_witness.husimi import FockQ, InnerQuadrature, default_twisted_grid
from wehrl_witness.states import cat_state, noon_state


def _best(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_state(state, grid_n, repeat):
    q4 = FockQ(state)
    grid = default_twisted_grid(q4.mean_excitation, grid_n)
    inner = InnerQuadrature.gauss_hermite(state.dim + 2)
    args = (grid.xs, grid.ys, inner.nodes, inner.weights, q4.coef1, q4.deg1,
            q4.coef2, q4.deg2, q4.core, q4.pops)
    res = {}
    for name in ("compiled", "python"):
        try:
            kernel = _backend.get_kernel(name)
        except ImportError:
            continue
        res[name] = _best(lambda: kernel(*args), repeat)
    return res


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--grid-n", type=int, default=65)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--N", type=int, nargs="+", default=[3, 9, 15])
    p.add_argument("--cat", type=float, nargs="*", default=[1.0])
    args = p.parse_args(argv)

    cases = [(f"noon N={n}", noon_state(n)) for n in args.N]
    cases += [(f"cat a={a:g} z=0.5", cat_state(a, 0.5)) for a in args.cat]
    print(f"grid {args.grid_n}x{args.grid_n}, best of {args.repeat}")
    print(f"{'state':<16}{'dim':>5}{'compiled s':>13}{'python s':>12}{'speed-up':>10}{'max |diff|':>13}")
    for label, state in cases:
        res = bench_state(state, args.grid_n, args.repeat)
        tc, oc = res.get("compiled", (np.nan, None))
        tp, op = res.get("python", (np.nan, None))
        diff = np.max(np.abs(oc - op)) if oc is not None and op is not None else np.nan
        print(f"{label:<16}{state.dim:>5}{tc:>13.4f}{tp:>12.4f}{tp / tc:>10.1f}{diff:>13.2e}")


if __name__ == "__main__":
    main()
