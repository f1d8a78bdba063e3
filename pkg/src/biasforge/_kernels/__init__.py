"""Edit-distance kernels with a compiled fast path.

Importing this package picks the Cython extension (``_speed``) when it was
built, otherwise the pure-Python twin (``_pure``). Set ``BIASFORGE_PURE_PY=1``
to force the fallback; the benchmark uses that to compare both backends on
the same inputs.
"""

import os

from biasforge._kernels import _pure

BACKEND = "pure"
_impl = _pure

if os.environ.get("BIASFORGE_PURE_PY") != "1":
    try:
        from biasforge._kernels import _speed as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        pass

levenshtein = _impl.levenshtein
bounded_levenshtein = _impl.bounded_levenshtein
prepare_keys = _impl.prepare_keys
scan_best = _impl.scan_best


def available_backends() -> dict:
    """Importable backend name -> module. Both when the extension is built."""
    backends = {"pure": _pure}
    try:
        from biasforge._kernels import _speed

        backends["compiled"] = _speed
    except ImportError:
        pass
    return backends
