"""Kernel backend selection for the comparison-function tree walk.

The compiled Cython kernel is preferred when it imported cleanly; the
vectorised pure-Python kernel is the fallback.  Set EMCOMP_PURE_PY=1 to
force the fallback (used by the backend parity tests and the kernel
benchmark).  Both backends produce bit-identical keys and outputs.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _dcf_py

_dcf_cy = None
if not os.environ.get("EMCOMP_PURE_PY"):
    try:
        from . import _dcf_cy  # type: ignore[no-redef]
    except ImportError:
        _dcf_cy = None

BACKEND = "compiled" if _dcf_cy is not None else "python"
_impl = _dcf_cy if _dcf_cy is not None else _dcf_py

key_size = _dcf_py.key_size
LEVEL_BYTES = _dcf_py.LEVEL_BYTES
HEADER_BYTES = _dcf_py.HEADER_BYTES


def gen_batch(alphas, betas, in_bits, out_bits, root0, root1, backend=None):
    impl = _backend(backend)
    return impl.gen_batch(
        np.asarray(alphas, dtype=np.uint64),
        np.asarray(betas, dtype=np.uint64),
        int(in_bits),
        int(out_bits),
        np.ascontiguousarray(root0, dtype=np.uint8),
        np.ascontiguousarray(root1, dtype=np.uint8),
    )


def eval_batch(party, keys, xs, in_bits, out_bits, threads: int = 1, backend=None):
    impl = _backend(backend)
    keys = np.ascontiguousarray(keys, dtype=np.uint8)
    xs = np.asarray(xs, dtype=np.uint64)
    n = keys.shape[0]
    if threads > 1 and impl is _dcf_cy and n >= 4 * threads:
        bounds = np.linspace(0, n, threads + 1, dtype=int)
        out = np.empty(n, dtype=np.uint64)

        def work(k):
            a, b = bounds[k], bounds[k + 1]
            out[a:b] = impl.eval_batch(party, keys[a:b], xs[a:b], in_bits, out_bits)

        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, range(threads)))
        return out
    return impl.eval_batch(int(party), keys, xs, int(in_bits), int(out_bits))


def _backend(name):
    if name is None:
        return _impl
    if name == "python":
        return _dcf_py
    if name == "compiled":
        if _dcf_cy is None:
            raise RuntimeError("compiled kernel not available")
        return _dcf_cy
    raise ValueError(f"unknown backend {name!r}")


def available_backends() -> list[str]:
    return ["compiled", "python"] if _dcf_cy is not None else ["python"]
