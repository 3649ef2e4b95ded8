"""Builds the optional compiled LSTM kernel.

The package works without the extension (a pure numpy fallback is selected
at import time), so a failed build only costs speed.
"""

import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "opscan.kernels._lstm_cy",
        ["src/opscan/kernels/_lstm_cy.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        # -ffast-math lets gcc vectorize the exp/tanh gate loops via libmvec;
        # gate inputs are always finite and the tests pin cross-backend error
        extra_compile_args=["-O3", "-ffast-math", "-march=native"],
        extra_link_args=["-lmvec", "-lm"],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)
