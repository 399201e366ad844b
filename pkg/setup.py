"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (a numpy fallback is selected at
import time), so a failed compile downgrades to a warning instead of
aborting the install.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext = Extension(
        "spininterp._kernels",
        ["src/spininterp/_kernels.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    ext_modules = cythonize([ext], language_level=3)
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"warning: building without compiled kernels ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
