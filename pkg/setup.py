import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = []
if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "signcast.nn.kernels._convcore",
                ["src/signcast/nn/kernels/_convcore.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

# The compiled kernels are optional: signcast.nn.kernels falls back to the
# vectorized NumPy implementation when the extension is absent.
setup(ext_modules=extensions)
