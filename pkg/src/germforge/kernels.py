"""Kernel backend selection.

The compiled extension is used when it imports; setting
``GERMFORGE_PURE_PYTHON=1`` forces the numpy fallback.
"""
from __future__ import annotations

import os

BACKEND = "python"

if os.environ.get("GERMFORGE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from ._kernels import compose_series, invert_series, wos_log_modulus  # noqa: F401

        BACKEND = "compiled"
    except ImportError:  # extension not built
        pass

if BACKEND == "python":
    from ._kernels_py import compose_series, invert_series, wos_log_modulus  # noqa: F401

__all__ = ["BACKEND", "compose_series", "invert_series", "wos_log_modulus"]
