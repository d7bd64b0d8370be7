"""Kernel selection.

The Cython extension is used when it is importable; otherwise the numpy
fallback is used. Set ``MEMRC_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _fallback

BACKEND = "python"
evolve = _fallback.evolve
sgd_epoch = _fallback.sgd_epoch

if os.environ.get("MEMRC_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels
    except ImportError:  # extension not built
        _kernels = None
    else:
        evolve = _kernels.evolve
        sgd_epoch = _kernels.sgd_epoch
        BACKEND = "cython"


def backends():
    """Available implementations keyed by name, for tests and benchmarks."""
    out = {"python": _fallback}
    try:
        from . import _kernels as ext
    except ImportError:
        return out
    out["cython"] = ext
    return out
