import os

from setuptools import setup

ext_modules = []
if os.environ.get("LIESYM_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension("liesym._evalkernel", ["src/liesym/_evalkernel.pyx"])],
            quiet=True,
        )
    except ImportError:
        # the numpy fallback in liesym.evaluate takes over
        ext_modules = []

setup(ext_modules=ext_modules)
