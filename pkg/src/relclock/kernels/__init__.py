"""Backend selection for the numerical hot spots.

The compiled extension is preferred when it imported cleanly; set the
environment variable RELCLOCK_PURE_PYTHON to any non-empty value to force
the numpy reference implementation.
"""

import os

if os.environ.get("RELCLOCK_PURE_PYTHON"):
    from . import _ref as _impl
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _ref as _impl

USING_COMPILED = _impl.__name__.endswith("_ckernels")

window_bounds = _impl.window_bounds
window_amplitudes = _impl.window_amplitudes
window_derivative = _impl.window_derivative
memory_accumulate = _impl.memory_accumulate

__all__ = [
    "USING_COMPILED",
    "window_bounds",
    "window_amplitudes",
    "window_derivative",
    "memory_accumulate",
]
