import os

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; descprox.kernels falls back
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("DESCPROX_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "descprox._kernels",
                ["src/descprox/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
