"""Selects the compiled kernel backend at import, falling back to numpy.

Set ``HKGLEARN_BACKEND=python`` or ``HKGLEARN_BACKEND=c`` to force a
backend (forcing ``c`` raises if the extension is missing). The active
module is re-exported as ``kernels``; both backends implement the same
functions with matching semantics.
"""

from __future__ import annotations

import os

from . import _kernels_py

_forced = os.environ.get("HKGLEARN_BACKEND", "").strip().lower()

if _forced in ("python", "py"):
    kernels = _kernels_py
elif _forced in ("c", "cython", "compiled"):
    from . import _kernels as kernels  # type: ignore[no-redef]
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        kernels = _kernels_py

BACKEND_NAME: str = kernels.BACKEND_NAME
HAVE_COMPILED: bool

try:
    from . import _kernels as _compiled  # noqa: F401

    HAVE_COMPILED = True
except ImportError:
    HAVE_COMPILED = False


def available_backends() -> dict[str, object]:
    """Name -> kernel module, for benchmarks and parity tests."""
    out: dict[str, object] = {"python": _kernels_py}
    if HAVE_COMPILED:
        from . import _kernels

        out["c"] = _kernels
    return out
