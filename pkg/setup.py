"""Build script: compiles the optional fast-kernel extension.

The package works without the extension (a pure-Python twin is selected
at import time), so a missing compiler or Cython only costs speed.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "masssim._kernels._native",
                ["src/masssim/_kernels/_native.pyx"],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
