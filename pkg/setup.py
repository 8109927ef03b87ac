"""Build script for the optional compiled kernels.

The Cython extension is optional: if it fails to build, the package still
installs and ``trackexp.kernels`` falls back to the pure-Python learners.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("TRACKEXP_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "trackexp._kernels",
                    ["src/trackexp/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except Exception as exc:  # pragma: no cover - build environment dependent
        print(f"warning: building without compiled kernels ({exc})")
        ext_modules = []

setup(ext_modules=ext_modules)
