"""Build script: compiles the optional Cython episode kernel.

The package is fully functional without the extension (a NumPy fallback is
selected at import time). Set SINKSHOT_PURE_PYTHON=1 to skip compilation.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("SINKSHOT_PURE_PYTHON") != "1":
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "sinkshot._kernel._mapkernel",
                    ["src/sinkshot/_kernel/_mapkernel.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level="3",
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
