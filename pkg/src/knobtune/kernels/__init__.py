"""Numeric kernel backend selection.

The compiled extension is preferred when it was built; otherwise the NumPy
implementations are used. Set ``TUNER_PURE=1`` to force the NumPy backend
(used by the benchmark to compare the two).
"""

import os

from . import _pykern

if os.environ.get("TUNER_PURE", "") not in ("", "0"):
    _impl = _pykern
else:
    try:
        from . import _ckern as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pykern

matern52_cross = _impl.matern52_cross
expected_improvement = _impl.expected_improvement
hesbo_expand = _impl.hesbo_expand

BACKEND = "compiled" if _impl is not _pykern else "pure"

__all__ = ["matern52_cross", "expected_improvement", "hesbo_expand", "BACKEND"]
