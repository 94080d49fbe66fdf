"""Kernel backend selection.

The compiled extension is used when it was built; otherwise (or when the
environment variable ``DECOYFORGE_PURE_PYTHON`` is set to a non-empty value
other than ``0``) the numpy implementations are used.  Both expose the same
functions with identical results.
"""

from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("DECOYFORGE_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

fock_lit_distribution = _impl.fock_lit_distribution
bb84_trials = _impl.bb84_trials
mdi_z_single_trials = _impl.mdi_z_single_trials
SUCCESS_MASKS = _kernels_py.SUCCESS_MASKS

__all__ = ["BACKEND", "fock_lit_distribution", "bb84_trials", "mdi_z_single_trials", "SUCCESS_MASKS"]
