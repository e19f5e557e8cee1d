"""Select the kernel implementation once, at import.

The compiled module is used when it was built; set ``BEAMFAIR_BACKEND=python``
to force the numpy fallback.
"""
import os

from beamfair import _pykernels

python_kernels = _pykernels

try:
    from beamfair import _ckernels as compiled_kernels
except ImportError:  # extension not built
    compiled_kernels = None

if compiled_kernels is not None and os.environ.get("BEAMFAIR_BACKEND", "").lower() != "python":
    kernels = compiled_kernels
    BACKEND = "cython"
else:
    kernels = python_kernels
    BACKEND = "python"
