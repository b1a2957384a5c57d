"""Build script: compiles the optional fast-math extension.

The package works without the extension (a pure-Python kernel module is
selected at import time), so a missing compiler or Cython only costs speed.
Pass --no-ext or set TELEOSCALE_NO_EXT=1 to skip compilation.
"""

import os
import sys

from setuptools import setup

ext_modules = []
skip = os.environ.get("TELEOSCALE_NO_EXT") == "1"
if "--no-ext" in sys.argv:
    skip = True
    sys.argv.remove("--no-ext")

if not skip:
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "teleoscale._kernels",
                    ["src/teleoscale/_kernels.pyx"],
                    # fp-contract off: keep float results identical to the
                    # pure-Python kernels so replay logs are comparable.
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
