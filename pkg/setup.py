"""Build the optional Cython kernels; the package falls back to pure Python without them."""

import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("MODSHIFT_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "modshift._kernels",
                    ["src/modshift/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
