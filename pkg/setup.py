"""Build script: compiles the sketch kernels when Cython and a C compiler
are available.  The package falls back to the pure-Python kernels at import
time if the extension is missing, so the build is best-effort."""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("pipesketch._kern", ["src/pipesketch/_kern.pyx"])],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
