import os

from setuptools import Extension, setup

try:
    if not os.path.exists("src/radionet/_kernels/_core.pyx"):
        raise ImportError
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "radionet._kernels._core",
                ["src/radionet/_kernels/_core.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )
except ImportError:
    # The package still works without the compiled core; the pure NumPy
    # backend in radionet._kernels.pure is selected at import time.
    ext_modules = []

setup(ext_modules=ext_modules)
