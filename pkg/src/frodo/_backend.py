"""Select the kernel backend once, at import.

Set ``FRODO_PURE_PYTHON=1`` to force the numpy fallback even when the
compiled extension is importable.
"""
import os

from . import _pycore

BACKEND = "python"
core = _pycore

if not os.environ.get("FRODO_PURE_PYTHON"):
    try:
        from . import _core
    except ImportError:
        pass
    else:
        core = _core
        BACKEND = "cython"


def available_backends():
    """Map backend name to kernel module for every backend importable here."""
    found = {"python": _pycore}
    try:
        from . import _core
    except ImportError:
        return found
    found["cython"] = _core
    return found
