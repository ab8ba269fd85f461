"""Kernel backend selection.

The compiled extension is preferred when built; the pure-Python module is
always available.  ``PIPESKETCH_BACKEND`` overrides the choice (``auto``,
``compiled``, or ``python``).
"""

from __future__ import annotations

import os

from . import _pure
from .errors import ConfigError

try:
    from . import _kern
except ImportError:
    _kern = None

_ALIASES = {
    "compiled": "compiled",
    "c": "compiled",
    "python": "python",
    "pure": "python",
}


def available_backends() -> dict[str, object]:
    """Name to kernel-module mapping for everything importable here."""
    out = {"python": _pure}
    if _kern is not None:
        out["compiled"] = _kern
    return out


def get_backend(name: str | None = None):
    """Resolve a kernel module by name, env override, or auto-preference."""
    if name is None:
        name = os.environ.get("PIPESKETCH_BACKEND", "auto")
    name = name.strip().lower()
    if name in ("", "auto"):
        return _kern if _kern is not None else _pure
    try:
        canonical = _ALIASES[name]
    except KeyError:
        raise ConfigError(
            f"unknown backend {name!r} (expected auto, compiled, or python)"
        ) from None
    if canonical == "compiled":
        if _kern is None:
            raise ConfigError("compiled backend requested but the extension is not built")
        return _kern
    return _pure
