"""Optional compiled kernels; the package falls back to numpy when the build fails."""
import os
import sys

from setuptools import Extension, setup


def _extensions():
    if os.environ.get("MULTIPLIER_LAB_NO_EXT"):
        return []
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        print("cython/numpy unavailable at build time; skipping compiled kernels", file=sys.stderr)
        return []
    ext = Extension(
        "multiplier_lab._ckernels",
        ["src/multiplier_lab/_ckernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=_extensions())
