"""Build script: compiles the event-engine kernel into an optional C extension.

The canonical kernel source is src/rcsim/engine/_kernel.py (plain Python).
At build time it is copied to _ckernel.py and cythonized, so the compiled
lane and the pure-Python fallback run the exact same code. If Cython is
unavailable the package installs pure-Python only.
"""

import shutil
from pathlib import Path

from setuptools import Extension, setup

HERE = Path(__file__).resolve().parent
KERNEL = HERE / "src" / "rcsim" / "engine" / "_kernel.py"
TWIN = HERE / "src" / "rcsim" / "engine" / "_ckernel.py"


def _ext_modules():
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    shutil.copyfile(KERNEL, TWIN)
    ext = Extension("rcsim.engine._ckernel", [str(TWIN.relative_to(HERE))])
    return cythonize(
        [ext],
        compiler_directives={"language_level": "3", "annotation_typing": False},
        quiet=True,
    )


setup(ext_modules=_ext_modules())
