import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # build without the compiled kernel
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("EITMEM_NO_EXT"):
    ext = Extension(
        "eitmem.sde._kernel",
        ["src/eitmem/sde/_kernel.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3", "-fcx-fortran-rules"],
    )
    ext_modules = cythonize([ext], compiler_directives={"language_level": 3})

setup(ext_modules=ext_modules)
