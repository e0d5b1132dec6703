"""Backend selection for the Jacobi eigen-kernel.

The compiled extension is used when it imports; otherwise the numpy
implementation takes over. ``use_backend`` switches explicitly (tests and the
benchmark run both).
"""

from __future__ import annotations

from . import _jacobi_py

try:
    from . import _jacobi_ext
except ImportError:  # extension not built
    _jacobi_ext = None

BACKENDS = {"python": _jacobi_py}
if _jacobi_ext is not None:
    BACKENDS["compiled"] = _jacobi_ext

_active = "compiled" if _jacobi_ext is not None else "python"


def available_backends() -> list[str]:
    return sorted(BACKENDS)


def active_backend() -> str:
    return _active


def use_backend(name: str) -> str:
    """Select the kernel backend; returns the previously active name."""
    global _active
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}; available: {available_backends()}")
    previous, _active = _active, name
    return previous


def jacobi_sweeps(a, v, tol, max_sweeps):
    return BACKENDS[_active].jacobi_sweeps(a, v, tol, max_sweeps)
