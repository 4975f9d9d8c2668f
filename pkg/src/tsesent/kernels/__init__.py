"""Hot loops of tree induction, with a compiled backend when available.

The Cython module is used if it was built; set ``TSESENT_PURE_PYTHON=1`` to
force the numpy fallback.  Both expose ``scan_splits`` and ``partition``.
"""

import os
from types import SimpleNamespace

from . import _numpy

try:
    from . import _ctree
except ImportError:  # extension not built
    _ctree = None

BACKENDS = {"numpy": _numpy}
if _ctree is not None:
    BACKENDS["cython"] = _ctree


def get_backend(name: str | None = None) -> SimpleNamespace:
    if name is None:
        forced = os.environ.get("TSESENT_PURE_PYTHON", "").strip() not in ("", "0")
        name = "numpy" if forced or _ctree is None else "cython"
    try:
        mod = BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available (have {sorted(BACKENDS)})") from None
    return SimpleNamespace(name=name, scan_splits=mod.scan_splits, partition=mod.partition)


_active = get_backend()
BACKEND = _active.name
scan_splits = _active.scan_splits
partition = _active.partition
