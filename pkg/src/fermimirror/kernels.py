"""Kernel backend selection.

The compiled extension is used when it imports; set ``FERMIMIRROR_PURE=1``
to force the numpy fallback.
"""

import os

from . import _pykernels

BACKENDS = {"python": _pykernels}

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None
else:
    BACKENDS["cython"] = _ckernels

if _ckernels is not None and not os.environ.get("FERMIMIRROR_PURE"):
    BACKEND = "cython"
else:
    BACKEND = "python"


def get(name: str | None = None):
    """Kernel module by name, defaulting to the selected backend."""
    return BACKENDS[name or BACKEND]


def __getattr__(attr):
    if attr in ("rk4_meanfield", "em_linear"):
        return getattr(BACKENDS[BACKEND], attr)
    raise AttributeError(attr)
