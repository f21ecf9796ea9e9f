import os

import numpy as np
from setuptools import Extension, setup

# BEHINV_NO_EXT=1 installs the pure-Python package only.
ext_modules = []
if not os.environ.get("BEHINV_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "behinv._kernels._core",
                    ["src/behinv/_kernels/_core.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
