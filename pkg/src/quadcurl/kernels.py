"""Backend selection for the hot jet kernels.

The compiled extension is used when it imports; set ``QUADCURL_PURE=1`` to
force the numpy fallback.
"""

import os

from . import _jetkernels_py as pure

BACKEND = "python"
jet_mul = pure.jet_mul
jet_horner = pure.jet_horner

if os.environ.get("QUADCURL_PURE", "") in ("", "0"):
    try:
        from . import _jetkernels as compiled
    except ImportError:  # pragma: no cover - depends on the build
        compiled = None
    if compiled is not None:
        BACKEND = "compiled"
        jet_mul = compiled.jet_mul
        jet_horner = compiled.jet_horner


def use_backend(name):
    """Switch backends at runtime (``"compiled"`` or ``"python"``)."""
    global BACKEND, jet_mul, jet_horner
    if name == "python":
        jet_mul, jet_horner = pure.jet_mul, pure.jet_horner
    elif name == "compiled":
        from . import _jetkernels as compiled_mod
        jet_mul, jet_horner = compiled_mod.jet_mul, compiled_mod.jet_horner
    else:
        raise ValueError(f"unknown backend {name!r}")
    BACKEND = name
