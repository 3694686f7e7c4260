import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("FRODO_NO_EXT"):
    extensions = [
        Extension(
            "frodo._core",
            ["src/frodo/_core.pyx"],
            include_dirs=[np.get_include()],
            # no -ffast-math / -march=native: the reduction identities need
            # plain IEEE double arithmetic without FMA contraction
            extra_compile_args=["-O3"],
        )
    ]
    ext_modules = cythonize(
        extensions,
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
