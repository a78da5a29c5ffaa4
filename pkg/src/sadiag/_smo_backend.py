"""Backend selection for the SMO dual solver.

Prefers the compiled extension; falls back to the numpy implementation
when the extension is unavailable. Set SADIAG_NO_EXT=1 to force the
fallback (used by the backend-equivalence tests and the benchmark).
"""

from __future__ import annotations

import os

if os.environ.get("SADIAG_NO_EXT") == "1":
    from ._smo_py import smo_solve

    BACKEND = "python"
else:
    try:
        from ._smo_cy import smo_solve

        BACKEND = "compiled"
    except ImportError:
        from ._smo_py import smo_solve

        BACKEND = "python"

__all__ = ["smo_solve", "BACKEND"]
