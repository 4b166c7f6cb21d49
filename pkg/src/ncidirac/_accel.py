"""Kernel dispatch: numba-jitted inner loops with a pure-numpy fallback.

The env var NCIDIRAC_JIT selects the path: "1" (default) compiles the hot
kernels with numba's @njit, "0" uses the numpy fallbacks.  Both paths are
exercised by the benchmark in benchmarks/bench_jets.py and produce identical
results; the numpy path exists for debugging and for platforms where numba
is unavailable.
"""

import os

import numpy as np

USE_JIT = os.environ.get("NCIDIRAC_JIT", "1") != "0"

if USE_JIT:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        USE_JIT = False

NCIDIRAC_THREADS = os.environ.get("NCIDIRAC_THREADS")
if USE_JIT and NCIDIRAC_THREADS:
    try:  # pragma: no cover
        import numba

        numba.set_num_threads(max(1, int(NCIDIRAC_THREADS)))
    except (ValueError, ImportError):
        pass


def _mul_acc_numpy(out, a, b, t_out, t_a, t_b):
    np.add.at(out, t_out, a[t_a] * b[t_b])


def _mul_acc_batch_numpy(out, a, b, t_out, t_a, t_b):
    np.add.at(out, t_out, a[t_a] * b[t_b, None])


if USE_JIT:

    @njit(cache=True)
    def _mul_acc_jit(out, a, b, t_out, t_a, t_b):  # pragma: no cover - compiled
        for m in range(t_out.shape[0]):
            out[t_out[m]] += a[t_a[m]] * b[t_b[m]]

    @njit(cache=True)
    def _mul_acc_batch_jit(out, a, b, t_out, t_a, t_b):  # pragma: no cover
        for m in range(t_out.shape[0]):
            o = t_out[m]
            bb = b[t_b[m]]
            aa = a[t_a[m]]
            for c in range(out.shape[1]):
                out[o, c] += aa[c] * bb

    mul_acc = _mul_acc_jit
    mul_acc_batch = _mul_acc_batch_jit
else:
    mul_acc = _mul_acc_numpy
    mul_acc_batch = _mul_acc_batch_numpy
