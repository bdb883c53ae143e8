"""Build the optional Cython kernels.

The package imports and runs without them (see ``scldpcl._core``); a failed
compile only costs speed.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("SCLDPCL_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "scldpcl._ckernels",
                    ["src/scldpcl/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
