import os

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("CSOPT_NO_EXT"):
    ext = Extension(
        "csopt._speedups",
        sources=["src/csopt/_speedups.pyx"],
        extra_compile_args=["-O3"],
    )
    # The compiled core is an accelerator only; a failed build must not
    # block installation (the pure-Python loops are selected instead).
    ext.optional = True
    ext_modules = cythonize([ext], compiler_directives={"language_level": "3"})

setup(ext_modules=ext_modules)
