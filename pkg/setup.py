"""Build script: compiles the optional simulator kernel extension.

The package works without the extension (a pure-Python twin of every
kernel ships alongside it), so a failed compile only costs speed.
"""

import numpy
from setuptools import setup, Extension

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext = Extension(
        "nfslicer.sim._kernels",
        sources=["src/nfslicer/sim/_kernels.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    ext_modules = cythonize([ext], language_level=3)

setup(ext_modules=ext_modules)
