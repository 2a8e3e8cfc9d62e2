"""Select the kernel implementation at import time.

The compiled ``_kernels`` extension is preferred. Setting the environment
variable ``GARDLAB_PURE=1`` forces the numpy fallback.
"""
import os

from . import _fallback

if os.environ.get("GARDLAB_PURE", "") not in ("", "0"):
    kernels = _fallback
else:
    try:
        from . import _kernels as kernels
    except ImportError:  # extension not built
        kernels = _fallback

BACKEND = kernels.BACKEND


def available():
    """Names of the importable backends, compiled first."""
    names = []
    try:
        from . import _kernels  # noqa: F401
        names.append("cython")
    except ImportError:
        pass
    names.append("python")
    return names


def get(name):
    if name == "python":
        return _fallback
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")
