"""Kernel backend selection.

The compiled Cython kernel and the pure-Python kernel implement the same
transition bit for bit; the compiled one is picked automatically when the
extension was built.  Override with the VOLTYARD_BACKEND environment
variable ("compiled" or "python") or the backend= argument on the engine.
"""

from __future__ import annotations

import os

from .pykernel import PySimCore

try:
    from . import _kernel  # type: ignore[attr-defined]
except ImportError:
    _kernel = None

BACKEND_COMPILED = "compiled"
BACKEND_PYTHON = "python"


def available_backends() -> tuple[str, ...]:
    if _kernel is not None:
        return (BACKEND_COMPILED, BACKEND_PYTHON)
    return (BACKEND_PYTHON,)


def resolve_backend(name: str | None = None) -> str:
    if name is None:
        name = os.environ.get("VOLTYARD_BACKEND")
    if name is None:
        return BACKEND_COMPILED if _kernel is not None else BACKEND_PYTHON
    name = name.lower()
    if name not in (BACKEND_COMPILED, BACKEND_PYTHON):
        raise ValueError(f"unknown backend {name!r}")
    if name == BACKEND_COMPILED and _kernel is None:
        raise RuntimeError("compiled kernel is not built; reinstall with Cython available")
    return name


def make_core(tables, states, outs, backend: str | None = None):
    name = resolve_backend(backend)
    if name == BACKEND_COMPILED:
        return _kernel.CySimCore(tables, states, outs)
    return PySimCore(tables, states, outs)
