"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
fallback. ``ITKRMM_BACKEND=python`` (or ``cython``) forces a choice.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["cython"] = _ckernels


def available() -> list[str]:
    return sorted(_BACKENDS)


def get(name: str | None = None):
    """Kernel module by name; ``None`` selects the default."""
    if name is None:
        name = os.environ.get("ITKRMM_BACKEND") or ("cython" if _ckernels is not None else "python")
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} not available (have {available()})") from None


def fortran(a, dtype=np.float64):
    return np.asfortranarray(a, dtype=dtype)


def mask_bytes(masks):
    return np.asfortranarray(masks, dtype=np.uint8)
