"""Backend selection for the compiled kernels.

Set ``BSS_DISABLE_NUMBA=1`` to force the pure-Python/numpy path. The flag is
read once at import time.
"""
import os

_DISABLED = os.environ.get("BSS_DISABLE_NUMBA", "").strip().lower() not in ("", "0", "false", "no")

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _DISABLED


def backend_name() -> str:
    return "numba" if USE_NUMBA else "python"
