"""Build script for the optional compiled training kernel.

The package is pure Python plus one Cython extension
(``codaimp.kernels._fastnet``) that fuses the per-batch
forward/backward/update step of network training.  If the extension
cannot be built (no compiler, no Cython), installation falls back to
the NumPy kernel with identical semantics.
"""

import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the extension if possible, warn and continue otherwise."""

    def run(self):
        try:
            build_ext.run(self)
        except Exception as exc:  # compiler missing, etc.
            self._warn(exc)

    def build_extension(self, ext):
        try:
            build_ext.build_extension(self, ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(
            "WARNING: building the compiled kernel failed; "
            f"falling back to the NumPy kernel.\n  reason: {exc}",
            file=sys.stderr,
        )


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        print(
            "WARNING: Cython not available; using the NumPy kernel only.",
            file=sys.stderr,
        )
        return []
    ext = Extension(
        "codaimp.kernels._fastnet",
        ["src/codaimp/kernels/_fastnet.pyx"],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], language_level=3)


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": optional_build_ext},
)
