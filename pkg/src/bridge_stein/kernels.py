"""Backend selection for the hot simulation kernels.

The compiled extension ``_ckernels`` is used when it imports cleanly.
Setting the environment variable ``BRIDGE_STEIN_PURE_PYTHON=1`` before the
first import forces the pure-Python twin.  Both backends consume the same
uniform stream and return identical results.
"""

import os

from . import _kernels_py

__all__ = ["BACKEND", "get_backend", "hypercube_run", "lattice_run",
           "birth_death_run", "hypercube_distance_matrix",
           "lattice_distance_matrix"]

_NAMES = ("hypercube_run", "lattice_run", "birth_death_run",
          "hypercube_distance_matrix", "lattice_distance_matrix")


def _load():
    if os.environ.get("BRIDGE_STEIN_PURE_PYTHON") == "1":
        return "python", _kernels_py
    try:
        from . import _ckernels
    except ImportError:
        return "python", _kernels_py
    return "cython", _ckernels


BACKEND, _impl = _load()


def get_backend(name=None):
    """Return the kernel module for ``name`` ('cython' or 'python').

    ``None`` returns the active backend.  Asking for 'cython' when the
    extension is not built raises ``ImportError``.
    """
    if name is None:
        return _impl
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown backend {name!r}")


hypercube_run = _impl.hypercube_run
lattice_run = _impl.lattice_run
birth_death_run = _impl.birth_death_run
hypercube_distance_matrix = _impl.hypercube_distance_matrix
lattice_distance_matrix = _impl.lattice_distance_matrix
