"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (a pure numpy fallback is selected
at import time), so a failed compile degrades to the slow path instead of
failing the install.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("betmart.kernels._core", ["src/betmart/kernels/_core.pyx"])],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - toolchain-dependent
    sys.stderr.write(f"betmart: skipping compiled kernels ({exc}); using pure-python fallback\n")

setup(ext_modules=ext_modules)
