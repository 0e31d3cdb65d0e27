from setuptools import Extension, setup

import numpy

try:
    from Cython.Build import cythonize
except ImportError:
    # Pure-Python install still works: knobtune.kernels falls back at import.
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "knobtune.kernels._ckern",
                ["src/knobtune/kernels/_ckern.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
