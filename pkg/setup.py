"""Build script: compiles the optional Cython forest kernel.

If Cython or a C compiler is unavailable the package still installs and
falls back to the pure-Python forest backend at import time.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    ext_modules = cythonize(
        [
            Extension(
                "ptdiscovery.forest._core",
                sources=["src/ptdiscovery/forest/_core.pyx"],
                include_dirs=[numpy.get_include()],
                # -ffp-contract=off keeps per-op IEEE semantics so the
                # compiled kernel matches the pure-Python backend bit-for-bit.
                extra_compile_args=["-O2", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
