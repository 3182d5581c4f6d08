"""Build script for the optional compiled kernels.

The package works without the extension (a pure-Python fallback is selected
at import time), so the extension is marked optional: a failed compile
degrades to the slow path instead of breaking the install.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
    import numpy as np
except ImportError:
    ext_modules = []
else:
    ext = Extension(
        "chaintest._kernels._speedups",
        ["src/chaintest/_kernels/_speedups.pyx"],
        include_dirs=[np.get_include()],
        # fused multiply-add contraction would make the compiled kernels
        # drift from the pure-Python fallback in the last bits
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        optional=True,
    )
    ext_modules = cythonize([ext], language_level=3)

setup(ext_modules=ext_modules)
