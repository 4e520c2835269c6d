"""Build script: compiles the optional Cython kernel extension.

Set CRASHCAST_PURE_PYTHON=1 to skip the extension; the package falls back
to the numpy kernels at import time when the extension is absent.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("CRASHCAST_PURE_PYTHON") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "crashcast.boosting._kernels_cy",
                    sources=["src/crashcast/boosting/_kernels_cy.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level="3",
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
