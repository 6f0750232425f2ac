"""Pick the presentation kernel at import time.

``SNNBUDGET_BACKEND=python`` forces the numpy fallback, ``=cython`` makes a
missing extension an error; the default uses the extension when it loads.
"""
import os

from . import _reference

_choice = os.environ.get("SNNBUDGET_BACKEND", "auto").lower()
if _choice not in ("auto", "cython", "python"):
    raise ImportError(f"SNNBUDGET_BACKEND must be auto, cython or python, not {_choice!r}")

_compiled = None
if _choice != "python":
    try:
        from . import _kernel as _compiled
    except ImportError:
        if _choice == "cython":
            raise

if _compiled is not None:
    run_presentation = _compiled.run_presentation
    NAME = "cython"
else:
    run_presentation = _reference.run_presentation
    NAME = "python"

BACKENDS = {"python": _reference.run_presentation}
if _compiled is not None:
    BACKENDS["cython"] = _compiled.run_presentation
