"""Kernel backend selection.

The compiled Cython extension ``spininterp._kernels`` is preferred when it
imported cleanly; otherwise the numpy fallback ``spininterp._kernels_py`` is
used.  Setting the environment variable ``SPININTERP_FORCE_FALLBACK=1``
forces the fallback (useful for benchmarking and debugging).

Worker-thread caps for the embarrassingly parallel sections are taken from
``--threads`` via :func:`set_threads`, falling back to ``SPININTERP_THREADS``.
"""

from __future__ import annotations

import os

from spininterp import _kernels_py

_impl = _kernels_py
if os.environ.get("SPININTERP_FORCE_FALLBACK", "") not in ("1", "true", "yes"):
    try:
        from spininterp import _kernels as _compiled

        _impl = _compiled
    except ImportError:
        pass

ACTIVE = _impl.NAME


def implementations() -> dict:
    """Name -> module for every available kernel implementation."""
    impls = {"python": _kernels_py}
    try:
        from spininterp import _kernels as _compiled

        impls["compiled"] = _compiled
    except ImportError:
        pass
    return impls


def htable(n, terms):
    return _impl.htable(n, terms)


def z_and_dz(table, beta):
    return _impl.z_and_dz(table, complex(beta))


def scaled_moments(table, k_max):
    return _impl.scaled_moments(table, k_max)


def dd_log_coeffs(a, a_low=None):
    return _impl.dd_log_coeffs(a, a_low)


def dd_exp_coeffs(b, b_low=None):
    return _impl.dd_exp_coeffs(b, b_low)


_threads: int | None = None


def set_threads(value: int | None) -> None:
    global _threads
    _threads = value


def get_threads() -> int:
    if _threads is not None:
        return max(1, _threads)
    env = os.environ.get("SPININTERP_THREADS", "")
    if env.isdigit() and int(env) > 0:
        return int(env)
    return os.cpu_count() or 1
