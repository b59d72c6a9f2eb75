"""Forest backend selection.

The compiled Cython kernel is preferred; the pure-Python mirror is the
fallback. Both produce identical trees, so the choice only affects speed.
Override with PTD_FOREST_BACKEND=python|cython.
"""

from __future__ import annotations

import os

from . import python_backend


class _Backend:
    def __init__(self, name: str, module):
        self.name = name
        self.build_tree = module.build_tree
        self.predict_votes = module.predict_votes


def _load() -> _Backend:
    choice = os.environ.get("PTD_FOREST_BACKEND", "auto").lower()
    if choice not in ("auto", "cython", "python"):
        raise ValueError(f"unknown forest backend {choice!r}")
    if choice in ("auto", "cython"):
        try:
            from . import _core  # compiled extension

            return _Backend("cython", _core)
        except ImportError:
            if choice == "cython":
                raise
    return _Backend("python", python_backend)


_ACTIVE = _load()


def active_backend() -> _Backend:
    return _ACTIVE


def get_backend(name: str | None = None) -> _Backend:
    """Resolve a backend by name ("cython"/"python"); None -> active."""
    if name is None:
        return _ACTIVE
    if name == "python":
        return _Backend("python", python_backend)
    if name == "cython":
        from . import _core

        return _Backend("cython", _core)
    raise ValueError(f"unknown forest backend {name!r}")
