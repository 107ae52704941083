"""Numeric-kernel backend selection.

Prefers the compiled extension ``ftmpc._kernels`` when it imported cleanly
and falls back to the pure-Python reference backend otherwise.  Set the
environment variable ``FTMPC_BACKEND=pure`` (or ``compiled``) to force a
specific backend at import time.
"""

import os

from . import _kernels_py

_choice = os.environ.get("FTMPC_BACKEND", "").strip().lower()

if _choice == "pure":
    backend = _kernels_py
elif _choice == "compiled":
    from . import _kernels as backend  # raises if the extension is missing
else:
    try:
        from . import _kernels as backend
    except ImportError:
        backend = _kernels_py

BACKEND_NAME = "compiled" if backend.COMPILED else "pure"

smooth_abs = backend.smooth_abs
tire_forces = backend.tire_forces
slip_ratio = backend.slip_ratio
pred_rhs = backend.pred_rhs
pred_step = backend.pred_step
output_vec = backend.output_vec
plant_rhs = backend.plant_rhs
plant_step = backend.plant_step
plant_wheel_outputs = backend.plant_wheel_outputs

STANDSTILL_V = _kernels_py.STANDSTILL_V
FZ_FIXED_POINT_ITERS = _kernels_py.FZ_FIXED_POINT_ITERS
