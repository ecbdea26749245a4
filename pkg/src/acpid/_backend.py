"""Kernel backend selection.

The compiled ``_kernels`` extension is used when importable; otherwise the
numpy ``_fallback``. Set ``ACPID_BACKEND=python`` to force the fallback.
Callers go through :data:`kernels` at call time so :func:`use` takes effect
immediately.
"""
from __future__ import annotations

import os
from types import ModuleType

from . import _fallback

try:
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover - depends on the build
    _compiled = None

kernels: ModuleType = _fallback
name = "python"


def available() -> list[str]:
    return ["compiled", "python"] if _compiled is not None else ["python"]


def use(backend: str) -> ModuleType:
    """Switch the active backend (``"compiled"`` or ``"python"``)."""
    global kernels, name
    if backend == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built; reinstall with Cython available")
        kernels, name = _compiled, "compiled"
    elif backend == "python":
        kernels, name = _fallback, "python"
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return kernels


if _compiled is not None and os.environ.get("ACPID_BACKEND", "").lower() != "python":
    use("compiled")
