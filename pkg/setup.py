import os

import numpy as np
from setuptools import Extension, setup

# Set ITKRMM_PURE_PYTHON=1 to skip the extension; the numpy fallback is used.
ext_modules = []
if not os.environ.get("ITKRMM_PURE_PYTHON"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "itkrmm._ckernels",
                ["src/itkrmm/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
