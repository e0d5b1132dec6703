"""Build the optional Cython Jacobi kernel.

The extension is marked optional: when Cython or a C compiler is missing the
package installs without it and falls back to the numpy implementation.
"""

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "qpigeon._jacobi_ext",
                ["src/qpigeon/_jacobi_ext.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
