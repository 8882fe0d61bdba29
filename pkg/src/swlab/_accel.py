"""Backend selection for the sampler scan loops.

The compiled extension is used when it imports; ``SWLAB_BACKEND=python``
forces the numpy fallback.
"""

import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["compiled"] = _ckernels


def available():
    return sorted(_BACKENDS)


def get(name=None):
    if name is None:
        name = os.environ.get("SWLAB_BACKEND", "compiled" if _ckernels is not None else "python")
    if name not in _BACKENDS:
        raise ImportError(f"backend '{name}' unavailable (have {available()})")
    return name, _BACKENDS[name]


BACKEND, kernels = get()
