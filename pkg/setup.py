"""Build script: compiles the optional Cython kernel core.

The package works without the extension (a pure-Python kernel set is
selected at import time), so a missing compiler degrades gracefully
instead of failing the install.  Set INVNETS_REQUIRE_EXT=1 to make a
failed extension build abort the install.

-ffp-contract=off keeps the compiled kernels bit-identical to the
pure-Python ones: fused multiply-adds would otherwise round differently.
"""

import os
import sys

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None


def extensions():
    if cythonize is None:
        return []
    ext = Extension(
        "invnets.backend._ckernels",
        ["src/invnets/backend/_ckernels.pyx"],
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


try:
    setup(ext_modules=extensions())
except SystemExit:
    if os.environ.get("INVNETS_REQUIRE_EXT") == "1" or cythonize is None:
        raise
    sys.stderr.write(
        "warning: Cython extension build failed; installing with the "
        "pure-Python kernel fallback\n"
    )
    setup(ext_modules=[])
