import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("DEMOKIT_PURE"):
    # Compiled detector kernels. Set DEMOKIT_PURE=1 to skip the build and
    # run on the pure-Python fallback (selected automatically at import).
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "demokit._kernels",
                sources=["src/demokit/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
