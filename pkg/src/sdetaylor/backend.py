"""Kernel backend selection.

The compiled extension is preferred when importable; set SDETAYLOR_BACKEND
to "python" or "cython" to force a choice (forcing "cython" raises if the
extension is missing).
"""
from __future__ import annotations

import os

from . import _kernels_py

_requested = os.environ.get("SDETAYLOR_BACKEND", "auto").lower()

if _requested == "python":
    _impl = _kernels_py
elif _requested == "cython":
    from . import _kernels as _impl  # type: ignore[no-redef]
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

contract_batch = _impl.contract_batch
BACKEND_NAME: str = _impl.BACKEND_NAME


def available_backends() -> list[str]:
    out = ["python"]
    try:
        from . import _kernels  # noqa: F401
        out.append("cython")
    except ImportError:
        pass
    return out
