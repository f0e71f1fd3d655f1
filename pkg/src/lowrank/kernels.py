"""Kernel implementation selection.

The compiled extension is preferred when importable; set LOWRANK_PURE_PY=1
to force the pure-numpy fallback (used by the parity tests and the kernel
benchmark).
"""

from __future__ import annotations

import os

if os.environ.get("LOWRANK_PURE_PY"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

IMPL = _impl.IMPL

zcounts = _impl.zcounts
best_rows = _impl.best_rows
weighted_best_rows = _impl.weighted_best_rows
best_cols = _impl.best_cols
pair_cost = _impl.pair_cost
min_dist_to_refs = _impl.min_dist_to_refs
best_rows_given_candrows = _impl.best_rows_given_candrows
fq_score_columns = _impl.fq_score_columns
