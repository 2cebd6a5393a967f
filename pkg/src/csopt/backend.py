"""Selection of the compiled inner-loop kernels.

The hot loops (fixed-step splitting runs, the adaptive controller loop, and
projected gradient descent on the sphere quadratic) have a Cython
implementation in ``csopt._speedups``. When the extension is missing, or
CSOPT_PURE_PYTHON is set, the drivers fall back to the generic pure-Python
per-step loops. ``benchmarks/bench_backends.py`` compares the two.
"""

from __future__ import annotations

import os

try:
    from . import _speedups
except ImportError:  # pragma: no cover - depends on the build
    _speedups = None


def compiled_available() -> bool:
    return _speedups is not None


def kernels():
    """The compiled kernel module, or None when disabled or not built."""
    if os.environ.get("CSOPT_PURE_PYTHON", "") not in ("", "0"):
        return None
    return _speedups
