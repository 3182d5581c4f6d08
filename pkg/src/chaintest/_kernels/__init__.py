"""Kernel backend selection.

The hot loops (finite-chain walks and the RK4 integrator behind every
likelihood evaluation) live in a compiled extension when available and in a
pure-Python fallback otherwise.  Both produce bitwise identical results;
set ``CHAINTEST_FORCE_FALLBACK=1`` to skip the extension (used by the
benchmark and the parity tests).
"""

import os

from . import fallback

if os.environ.get("CHAINTEST_FORCE_FALLBACK"):
    _impl = fallback
else:
    try:
        from . import _speedups as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = fallback

BACKEND = _impl.NAME

finite_chain_path = _impl.finite_chain_path
jakstat_path = _impl.jakstat_path
jakstat_probe = _impl.jakstat_probe


def backend_name():
    """Name of the active kernel backend: "compiled" or "python"."""
    return BACKEND
