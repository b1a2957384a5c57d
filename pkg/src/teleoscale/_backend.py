"""Kernel backend selection.

The compiled extension is preferred when present; the pure-Python module is
the fallback.  TELEOSCALE_KERNELS=python|compiled forces a choice (forcing
"compiled" when the extension is missing is an error, so benchmarks cannot
silently compare python against itself).
"""

import os

from . import _kernels_py

_forced = os.environ.get("TELEOSCALE_KERNELS", "").strip().lower()

if _forced == "python":
    kernels = _kernels_py
elif _forced == "compiled":
    from . import _kernels as kernels  # type: ignore[no-redef]
elif _forced:
    raise ImportError(f"TELEOSCALE_KERNELS must be 'python' or 'compiled', got {_forced!r}")
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        kernels = _kernels_py

BACKEND = kernels.BACKEND


def available_backends():
    """Names of importable kernel backends (always includes 'python')."""
    names = ["python"]
    try:
        from . import _kernels  # noqa: F401
        names.append("compiled")
    except ImportError:
        pass
    return names
