"""Euler-Maruyama integration kernels with a compiled/pure-Python switch.

The compiled Cython backend is used when importable; set
PULSELAB_BACKEND=python (or =cython) to force a choice.
"""

import os

_forced = os.environ.get("PULSELAB_BACKEND", "").strip().lower()

if _forced == "python":
    from . import _pykernels as backend

    BACKEND = "python"
elif _forced == "cython":
    from . import _ckernels as backend  # noqa: F401

    BACKEND = "cython"
else:
    try:
        from . import _ckernels as backend  # noqa: F401

        BACKEND = "cython"
    except ImportError:
        from . import _pykernels as backend

        BACKEND = "python"


def available_backends():
    """Names of the importable backends ('python' always, 'cython' if built)."""
    names = ["python"]
    try:
        from . import _ckernels  # noqa: F401

        names.append("cython")
    except ImportError:
        pass
    return names


def get_backend(name=None):
    """Return a kernels module by name ('cython' or 'python'), default active."""
    if name is None:
        return backend
    if name == "python":
        from . import _pykernels

        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {name!r}")
