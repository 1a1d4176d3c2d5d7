"""Backend selection for the contribution-table argmin.

The compiled extension is used when it was built; ``IPRNPA_PURE_PYTHON=1``
forces the NumPy fallback.
"""
from __future__ import annotations

import os

from . import _kernels_py

materialize = _kernels_py.materialize

_py_argmin = _kernels_py.argmin_entry
_c_argmin = None
if os.environ.get("IPRNPA_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from ._ckernels import argmin_entry as _c_argmin  # type: ignore
    except ImportError:  # extension not built
        _c_argmin = None

BACKEND = "compiled" if _c_argmin is not None else "python"


def available_backends() -> list[str]:
    return ["python"] + (["compiled"] if _c_argmin is not None else [])


def get_argmin(backend: str | None = None):
    backend = backend or BACKEND
    if backend == "python":
        return _py_argmin
    if backend == "compiled":
        if _c_argmin is None:
            raise RuntimeError("compiled kernels are not available; build the extension")
        return _c_argmin
    raise ValueError(f"unknown backend {backend!r}")
