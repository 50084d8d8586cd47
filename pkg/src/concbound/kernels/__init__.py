"""Hot loops behind a backend switch.

numba is used when importable unless ``CONCBOUND_DISABLE_NUMBA`` is set to a
non-empty value other than ``0``; the pure-numpy module is the fallback and the
reference. Both produce identical results for identical inputs and RNG states.
"""
import logging
import os

from . import _numpy

log = logging.getLogger(__name__)

ENV_FLAG = "CONCBOUND_DISABLE_NUMBA"


def _numba_disabled() -> bool:
    return os.environ.get(ENV_FLAG, "") not in ("", "0")


def _load():
    if _numba_disabled():
        return _numpy, "numpy"
    try:
        from . import _numba
    except ImportError as exc:
        log.info("numba unavailable (%s); using numpy kernels", exc)
        return _numpy, "numpy"
    return _numba, "numba"


_impl, BACKEND = _load()


def get_backend(name: str | None = None):
    """Kernel module by name ('numba' or 'numpy'); None gives the active one."""
    if name is None:
        return _impl
    if name == "numpy":
        return _numpy
    if name == "numba":
        from . import _numba
        return _numba
    raise ValueError(f"unknown backend {name!r}")


dp_kmax = _impl.dp_kmax
dp_advance_float = _impl.dp_advance_float
dp_advance_mod = _impl.dp_advance_mod
dp_collapse_float = _impl.dp_collapse_float
dp_collapse_mod = _impl.dp_collapse_mod
mc_hits = _impl.mc_hits
torus_mean = _impl.torus_mean
