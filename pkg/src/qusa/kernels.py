"""Kernel backend selection.

The compiled extension ``qusa._ckernels`` is used when it imports; otherwise
the numpy implementation in ``qusa._pykernels`` is used.  ``use_backend``
switches explicitly (tests and the benchmark run both).
"""
from __future__ import annotations

from types import ModuleType

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

__all__ = ["apply_generator", "propagate", "backend_name", "use_backend", "available_backends"]

_active: ModuleType = _ckernels if _ckernels is not None else _pykernels


def available_backends() -> list[str]:
    return ["python"] + (["compiled"] if _ckernels is not None else [])


def backend_name() -> str:
    return "compiled" if _active is _ckernels and _ckernels is not None else "python"


def use_backend(name: str) -> None:
    global _active
    if name == "python":
        _active = _pykernels
    elif name == "compiled":
        if _ckernels is None:
            raise RuntimeError("compiled kernels are not built; run `pip install -e .` with Cython available")
        _active = _ckernels
    else:
        raise ValueError(f"unknown backend {name!r}")


def get_module(name: str) -> ModuleType:
    if name == "python":
        return _pykernels
    if name == "compiled" and _ckernels is not None:
        return _ckernels
    raise RuntimeError(f"backend {name!r} unavailable")


def apply_generator(psi, diag, local, triode_count):
    return _active.apply_generator(psi, diag, local, triode_count)


def propagate(psi, diag, local, triode_count, dt, norm_bound):
    return _active.propagate(psi, diag, local, triode_count, dt, norm_bound)
