"""Build the optional compiled simulation kernel.

Without Cython or a C compiler the package still installs; the simulator
then falls back to the pure-Python kernel.
"""

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("regsyn._kernel", ["src/regsyn/_kernel.pyx"],
                   include_dirs=[np.get_include()], extra_compile_args=["-O3"])],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
