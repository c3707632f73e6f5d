"""Kernel backend selection.

The numeric inner loops exist twice: a compiled Cython extension
(``_ckernels``) and a pure-Python fallback (``pykernels``) with identical
semantics and bit-identical results.  The compiled one is used when
importable; ``INVNETS_BACKEND=python`` or ``INVNETS_BACKEND=cython``
forces a choice (forcing cython raises if the extension is missing).

``invnets.backend.k`` is the active kernel module; ``BACKEND`` names it.
"""

import os

_choice = os.environ.get("INVNETS_BACKEND", "auto").strip().lower()

if _choice in ("auto", "", "cython", "compiled", "cy", "c"):
    try:
        from invnets.backend import _ckernels as k

        BACKEND = "cython"
    except ImportError:
        if _choice not in ("auto", ""):
            raise
        from invnets.backend import pykernels as k

        BACKEND = "python"
elif _choice in ("python", "py", "pure"):
    from invnets.backend import pykernels as k

    BACKEND = "python"
else:
    raise ValueError(
        f"INVNETS_BACKEND={_choice!r} not recognized; use 'auto', 'cython' or 'python'"
    )


def available_backends():
    """Names of the kernel implementations importable in this install."""
    names = ["python"]
    try:
        from invnets.backend import _ckernels  # noqa: F401

        names.insert(0, "cython")
    except ImportError:
        pass
    return names
