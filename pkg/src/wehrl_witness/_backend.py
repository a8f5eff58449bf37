"""Selects the compiled kernel when importable, else the numpy fallback.

Set ``WEHRL_BACKEND=python`` to force the fallback.
"""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _kernel_py

_compiled = None
if os.environ.get("WEHRL_BACKEND", "").lower() != "python":
    try:
        from . import _kernel as _compiled
    except ImportError:
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"


def get_kernel(name=None):
    name = name or BACKEND
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernel is not built; run `pip install -e .`")
        return _compiled.twisted_marginal
    if name == "python":
        return _kernel_py.twisted_marginal
    raise ValueError(f"unknown backend {name!r}")


def default_threads():
    env = os.environ.get("WEHRL_THREADS")
    if env:
        return max(1, int(env))
    return 1


def twisted_marginal(a_vals, b_vals, nodes, weights, coef1, deg1, coef2, deg2, core, pops,
                     backend=None, threads=None):
    """Run the kernel, splitting output rows across threads.

    Rows are independent, so the result does not depend on ``threads``.
    """
    kernel = get_kernel(backend)
    a_vals = np.ascontiguousarray(a_vals, dtype=float)
    b_vals = np.ascontiguousarray(b_vals, dtype=float)
    args = (
        np.ascontiguousarray(nodes, dtype=float),
        np.ascontiguousarray(weights, dtype=float),
        np.ascontiguousarray(coef1, dtype=complex),
        np.ascontiguousarray(deg1, dtype=np.intp),
        np.ascontiguousarray(coef2, dtype=complex),
        np.ascontiguousarray(deg2, dtype=np.intp),
        np.ascontiguousarray(core, dtype=complex),
        np.ascontiguousarray(pops, dtype=float),
    )
    threads = threads or default_threads()
    if threads <= 1 or a_vals.size < 2 * threads:
        return kernel(a_vals, b_vals, *args)
    chunks = np.array_split(a_vals, threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda c: kernel(np.ascontiguousarray(c), b_vals, *args), chunks))
    return np.vstack(parts)
