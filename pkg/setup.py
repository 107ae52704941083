"""Build script: compiles the optional Cython kernel extension.

The package works without it (the pure-Python backend is selected at
import time), so a missing compiler or Cython must not fail the install.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("FTMPC_NO_EXTENSION", "") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            ["src/ftmpc/_kernels.pyx"],
            compiler_directives={"language_level": "3"},
        )
        for ext in ext_modules:
            ext.optional = True  # tolerate missing C compiler
            # keep bit-exact parity with the pure-Python backend: no
            # multiply-add contraction, strict IEEE evaluation, and no
            # fusing of adjacent sin/cos calls into glibc's sincos (whose
            # last-ulp rounding differs from the separate calls)
            ext.extra_compile_args = [
                "-ffp-contract=off", "-fno-fast-math",
                "-fno-builtin-sin", "-fno-builtin-cos",
                "-fno-builtin-sincos",
            ]
    except ImportError:
        pass

setup(ext_modules=ext_modules)
