import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "snnbudget._kernel",
        ["src/snnbudget/_kernel.pyx"],
        include_dirs=[np.get_include()],
        # no -ffast-math / FMA: the kernel must round exactly like the numpy fallback
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}))
