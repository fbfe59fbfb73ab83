"""Builds the optional Cython kernel extension.

If Cython or a C compiler is missing the package still installs; the
pure-numpy kernels in ``pseudoloc._kernels_py`` are used instead.
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
                "pseudoloc._kernels",
                ["src/pseudoloc/_kernels.pyx"],
                include_dirs=[np.get_include()],
                # no -ffast-math: results must match the numpy fallback bit for bit
                extra_compile_args=["-O2", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
