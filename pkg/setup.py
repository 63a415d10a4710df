import os

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

# -ffp-contract=off keeps results bit-identical to the pure-Python kernel.
ext = Extension(
    "wifislice._kernel",
    ["src/wifislice/_kernel.pyx"],
    extra_compile_args=["-O3", "-ffp-contract=off"],
)

if cythonize is None or os.environ.get("WIFISLICE_NO_EXT"):
    ext_modules = []
else:
    ext_modules = cythonize([ext], compiler_directives={"language_level": 3})

setup(ext_modules=ext_modules)
