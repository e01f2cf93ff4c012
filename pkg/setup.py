"""Build script for the optional compiled geometry kernels.

The package works without the extension (a pure-Python fallback is selected
at import time), so a failed compile only costs speed, not functionality.
"""

import numpy
from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Try to build the Cython kernels; warn instead of failing."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001
            print(f"warning: compiled geokern build failed ({exc}); "
                  f"falling back to the pure-Python kernels")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            print(f"warning: building {ext.name} failed ({exc}); "
                  f"falling back to the pure-Python kernels")


def extensions():
    from Cython.Build import cythonize

    ext = Extension(
        "radiodiff.geokern._kernels",
        ["src/radiodiff/geokern/_kernels.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
