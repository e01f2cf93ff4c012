"""Grid-geometry kernels with a compiled core and a pure-Python fallback.

The Cython extension is preferred when importable; set
``RADIODIFF_GEOKERN=python`` to force the fallback (``auto`` / ``cython``
select the compiled path when available). ``BACKEND`` reports which
implementation is active; ``benchmarks/bench_geokern.py`` compares the two.
"""

import os

_choice = os.environ.get("RADIODIFF_GEOKERN", "auto").lower()

if _choice == "python":
    from . import _fallback as _impl
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:
        if _choice == "cython":
            raise
        from . import _fallback as _impl  # type: ignore[no-redef]
        BACKEND = "python"

traverse_cells = _impl.traverse_cells
wall_crossings = _impl.wall_crossings
ray_volatility = _impl.ray_volatility
ring_bilinear = _impl.ring_bilinear

__all__ = ["BACKEND", "traverse_cells", "wall_crossings", "ray_volatility", "ring_bilinear"]
