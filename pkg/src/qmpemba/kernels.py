"""Backend selection for the hot kernels.

The compiled extension ``_ckernels`` is used when it was built; otherwise the
numpy implementations in ``_pykernels`` are used.  Setting the environment
variable ``QMPEMBA_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("QMPEMBA_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels

sector_states = _impl.sector_states
hopping_elements = _impl.hopping_elements
deposit_bits = _impl.deposit_bits
extract_bits = _impl.extract_bits
embed_table = _impl.embed_table
rk4_tridiagonal = _impl.rk4_tridiagonal


def backends():
    """Map of available backend name -> kernel module."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
