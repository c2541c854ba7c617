"""Kernel backend selection: compiled extension if built, numpy otherwise.

Set ``MCVAR_PURE_PYTHON=1`` to force the numpy fallback (used to test and
benchmark both paths).  ``USING_COMPILED`` records which backend won; the
CLI ``--version`` string and the kernel benchmark report it.  Both backends
expose the same four functions (see ``_kernels_py`` for signatures).
"""

import os

if os.environ.get("MCVAR_PURE_PYTHON"):
    from . import _kernels_py as _impl

    USING_COMPILED = False
else:
    try:
        from . import _kernels as _impl

        USING_COMPILED = True
    except ImportError:  # pragma: no cover - depends on the build environment
        from . import _kernels_py as _impl

        USING_COMPILED = False

autocov_direct = _impl.autocov_direct
moment_weighted_sums = _impl.moment_weighted_sums
ar1_filter = _impl.ar1_filter
mh_path = _impl.mh_path

BACKEND = "compiled" if USING_COMPILED else "python"
