"""Build hook for the optional compiled contraction kernels.

The package is fully functional without the extension; if Cython or a C
compiler is unavailable the build falls back to the pure-numpy kernels.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("SDETAYLOR_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            ["src/sdetaylor/_kernels.pyx"],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
        include_dirs = [numpy.get_include()]
        for ext in ext_modules:
            ext.include_dirs = include_dirs
    except Exception:
        ext_modules = []

setup(ext_modules=ext_modules)
