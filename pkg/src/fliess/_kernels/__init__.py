"""Kernel backend selection.

Imports the compiled Cython kernels when the extension built, falling
back to the pure-Python twin otherwise.  Set FLIESS_PURE=1 in the
environment to force the fallback (used by the benchmark and tests).
"""

import os

if os.environ.get("FLIESS_PURE"):
    from fliess._kernels import _pure as _impl
else:
    try:
        from fliess._kernels import _fast as _impl
    except ImportError:
        from fliess._kernels import _pure as _impl

BACKEND = _impl.BACKEND
shuffle_terms = _impl.shuffle_terms
clear_cache = _impl.clear_cache
cache_size = _impl.cache_size
