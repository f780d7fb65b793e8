import numpy
from setuptools import setup
from setuptools.extension import Extension

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = [
    Extension(
        "hkglearn._kernels",
        ["src/hkglearn/_kernels.pyx"],
        include_dirs=[numpy.get_include()],
        # no -ffast-math: the fallback backend must stay numerically comparable
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

if cythonize is not None:
    ext_modules = cythonize(
        extensions,
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
else:
    # package still installs and runs on the pure-python backend
    ext_modules = []

setup(ext_modules=ext_modules)
