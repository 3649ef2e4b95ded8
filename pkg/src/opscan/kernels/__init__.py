"""LSTM kernel backends: compiled Cython extension with a numpy fallback.

The compiled backend is used when the extension built; set OPSCAN_BACKEND
to "pure" or "compiled" to force one.  set_backend() switches at runtime
(the training loop and scanner pick up the active backend per call).
"""

import os

from . import reference

try:
    from . import _lstm_cy as _compiled
except ImportError:  # extension not built; pure numpy still works
    _compiled = None

_BACKENDS = {"pure": reference}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled


def available_backends():
    return sorted(_BACKENDS)


def _resolve(name: str):
    if name == "auto":
        name = "compiled" if _compiled is not None else "pure"
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"unknown backend {name!r}; available: {available_backends()}"
        ) from None


_active = _resolve(os.environ.get("OPSCAN_BACKEND", "auto"))


def set_backend(name: str) -> str:
    """Switch the active backend ("pure", "compiled", or "auto")."""
    global _active
    _active = _resolve(name)
    return _active.NAME


def backend_name() -> str:
    return _active.NAME


def lstm_forward(x, w_x, w_h, b):
    return _active.lstm_forward(x, w_x, w_h, b)


def lstm_backward(dh_out, cache, w_x, w_h):
    return _active.lstm_backward(dh_out, cache, w_x, w_h)
