from setuptools import setup, Extension

import numpy

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "pulselab.kernels._ckernels",
                ["src/pulselab/kernels/_ckernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    # Pure-Python fallback kernels are used when the extension is unavailable.
    ext_modules = []

setup(ext_modules=ext_modules)
