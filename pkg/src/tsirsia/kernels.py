"""Backend selection for the hot loops.

The compiled extension is used when importable; set ``TSIRSIA_PURE_PYTHON=1``
to force the pure-Python fallback.
"""
import os

from . import _pykernels

python_backend = _pykernels

if os.environ.get("TSIRSIA_PURE_PYTHON", "") not in ("", "0"):
    compiled_backend = None
else:
    try:
        from . import _ckernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

backend = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "cython" if backend is compiled_backend else "python"

balance = backend.balance
loglik = backend.loglik
latent_sweep = backend.latent_sweep


def get_backend(name=None):
    """Return the kernel module for ``name`` ("cython", "python" or None)."""
    if name is None:
        return backend
    if name == "python":
        return python_backend
    if name == "cython":
        if compiled_backend is None:
            raise ImportError("compiled kernels are not available")
        return compiled_backend
    raise ValueError(f"unknown backend {name!r}")
