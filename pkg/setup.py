"""Build the optional compiled weight kernel.

Without Cython or a C compiler the package still installs and falls back to
the numpy implementation.
"""
import numpy  # noqa: F401  (build requirement)
from setuptools import setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # pragma: no cover
            print(f"warning: compiled kernel not built ({exc}); using numpy fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # pragma: no cover
            print(f"warning: failed to build {ext.name} ({exc}); using numpy fallback")


try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/kontra/weights/_kernel.pyx"],
        compiler_directives={"language_level": 3},
        quiet=True,
    )
    for ext in ext_modules:
        ext.extra_compile_args = ["-O3"]
        ext.libraries = ["m"]
except ImportError:  # pragma: no cover
    ext_modules = []

setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
