"""Hot numeric kernels with switchable backends.

Two implementations exist for each kernel: a numba @njit one and a pure
numpy one. The active default is chosen by the RABICAL_BACKEND environment
variable ("numba", "numpy", or "auto"; auto prefers numba when importable).
Shot sampling is bit-identical across backends; the curve-fit kernel agrees
to floating-point tolerance (summation order differs).
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable

ENV_VAR = "RABICAL_BACKEND"

_BACKENDS: dict[str, "Backend"] = {}


@dataclass(frozen=True)
class Backend:
    name: str
    binomial_counts: Callable
    lm_damped_cosine: Callable
    lm_fixed_omega: Callable


def numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def default_backend_name() -> str:
    choice = os.environ.get(ENV_VAR, "auto").strip().lower()
    if choice in ("", "auto"):
        return "numba" if numba_available() else "numpy"
    return choice


def get_backend(name: str | None = None) -> Backend:
    """Resolve a backend by name (None means the environment default)."""
    if name is None:
        name = default_backend_name()
    name = name.lower()
    if name in _BACKENDS:
        return _BACKENDS[name]

    if name == "numpy":
        from . import _lmcore, sampling_numpy

        backend = Backend(
            "numpy",
            sampling_numpy.binomial_counts,
            _lmcore.lm_damped_cosine,
            _lmcore.lm_fixed_omega,
        )
    elif name == "numba":
        if not numba_available():
            raise RuntimeError(
                "backend 'numba' requested via %s but numba is not importable" % ENV_VAR
            )
        from numba import njit

        from . import _lmcore, sampling_numba

        backend = Backend(
            "numba",
            sampling_numba.binomial_counts,
            njit(cache=True)(_lmcore.lm_damped_cosine),
            njit(cache=True)(_lmcore.lm_fixed_omega),
        )
    else:
        raise ValueError(f"unknown backend {name!r}; valid: 'numba', 'numpy', 'auto'")

    _BACKENDS[name] = backend
    return backend
