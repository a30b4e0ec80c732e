"""Greedy ranking kernel selection.

Prefers the compiled Cython kernel when it was built; falls back to the
numpy implementation otherwise. Set DIVSAMPLE_PURE_PYTHON=1 to force the
fallback (used by the parity tests and the benchmark).
"""

import os

from divsample._kernel import _gme_py

if os.environ.get("DIVSAMPLE_PURE_PYTHON"):
    _impl = _gme_py
    BACKEND = "python"
else:
    try:
        from divsample._kernel import _gme_cy as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _gme_py
        BACKEND = "python"

gme_rank = _impl.gme_rank

__all__ = ["gme_rank", "BACKEND"]
