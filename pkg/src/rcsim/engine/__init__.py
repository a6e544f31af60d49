"""Event-engine lane selection: compiled twin when available, else pure Python.

Both lanes are built from the same source file (see setup.py), so behavior is
identical; set RCSIM_PURE_PYTHON=1 to force the fallback.
"""
import os

from rcsim.engine import _kernel as _pure

if os.environ.get("RCSIM_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pure
else:
    try:
        from rcsim.engine import _ckernel as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pure

COMPILED = _impl is not _pure and not _impl.__file__.endswith(".py")
if not COMPILED:
    _impl = _pure
BACKEND = "compiled" if COMPILED else "pure"

Engine = _impl.Engine
NandOp = _impl.NandOp
phase_rows = _impl.phase_rows
phase_intervals = _impl.phase_intervals
OFFCHIP_COPY = _impl.OFFCHIP_COPY
COPYBACK = _impl.COPYBACK
HOST_READ = _impl.HOST_READ
HOST_WRITE = _impl.HOST_WRITE
ERASE = _impl.ERASE
OP_NAMES = _impl.OP_NAMES
PHASE_NAMES = _impl.PHASE_NAMES
