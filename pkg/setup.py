"""Build script for the optional compiled slice-sampling core.

The extension is optional: if Cython or a C compiler is unavailable the
package installs without it and falls back to the pure-Python kernels.
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
                "mlgweibull._cslice",
                ["src/mlgweibull/_cslice.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
