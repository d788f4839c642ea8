"""Kernel selection: compiled extension when importable, numpy otherwise."""
import os

from . import _simplex_py

try:
    from . import _simplex_c
except ImportError:  # extension not built
    _simplex_c = None

_KERNELS = {"python": _simplex_py}
if _simplex_c is not None:
    _KERNELS["cython"] = _simplex_c

_forced = os.environ.get("COUPLED_IGDT_BACKEND", "").strip().lower()
if _forced and _forced not in ("python", "cython"):
    raise ImportError(f"COUPLED_IGDT_BACKEND must be 'python' or 'cython', got {_forced!r}")
if _forced == "cython" and _simplex_c is None:
    raise ImportError("COUPLED_IGDT_BACKEND=cython but the compiled kernel is not built")
BACKEND = _forced or ("cython" if _simplex_c is not None else "python")


def available():
    return sorted(_KERNELS)


def kernel(name=None):
    name = name or BACKEND
    try:
        return _KERNELS[name]
    except KeyError:
        raise ValueError(f"LP backend {name!r} is not available (have {available()})") from None
