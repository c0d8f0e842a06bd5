"""Kernel backend selection.

The dense-net kernels exist twice: a compiled extension (ivrl._core, built
from Cython) and a NumPy fallback (ivrl._core_py) with the same call surface.
The compiled core is preferred when importable; setting IVRL_PURE_PYTHON=1
forces the fallback. Both produce gradients exact to their own forward pass;
they agree with each other to floating-point reassociation error only, so
bit-level determinism guarantees hold per backend.
"""

import os

if os.environ.get("IVRL_PURE_PYTHON", "") not in ("", "0"):
    from ivrl import _core_py as core

    BACKEND = "pure-python"
else:
    try:
        from ivrl import _core as core  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        from ivrl import _core_py as core  # type: ignore[no-redef]

        BACKEND = "pure-python"


def backend_name() -> str:
    """Name of the kernel backend selected at import time."""
    return BACKEND
