from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the AES-NI kernel when possible; the package falls back to the
    pure-Python kernel at import when the extension is missing."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing entirely
            print(f"warning: skipping compiled kernel ({exc})")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # non-x86 target, missing intrinsics, ...
            print(f"warning: compiled kernel unavailable ({exc})")


try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "emcomp._dcf_cy",
                ["src/emcomp/_dcf_cy.pyx"],
                extra_compile_args=["-O3", "-maes", "-mssse3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions, cmdclass={"build_ext": OptionalBuildExt})
