"""Build the optional compiled kernel module.

The package works without the extension (a pure-numpy fallback is selected at
import time), so any failure here downgrades to a warning instead of aborting
the install.
"""

import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler, etc.
            print(f"WARNING: compiled kernels skipped ({exc}); "
                  "falling back to the pure-python backend", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"WARNING: building {ext.name} failed ({exc}); "
                  "falling back to the pure-python backend", file=sys.stderr)


def extensions():
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError as exc:
        print(f"WARNING: {exc}; compiled kernels skipped", file=sys.stderr)
        return []
    # -ffast-math lets gcc use the vectorized libmvec sin/cos, which is the
    # whole point of the compiled kernel; -march=native is dropped if the
    # compiler rejects it (see _march_flags).
    ext = Extension(
        "filament_mc._core",
        ["src/filament_mc/_core.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3", "-ffast-math"] + _march_flags(),
        libraries=["m"],
        extra_link_args=["-Wl,--no-as-needed", "-lmvec"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level="3")


def _march_flags():
    import shutil
    import subprocess
    import tempfile

    cc = shutil.which("cc") or shutil.which("gcc")
    if cc is None:
        return []
    with tempfile.NamedTemporaryFile("w", suffix=".c") as f:
        f.write("int main(void){return 0;}\n")
        f.flush()
        probe = subprocess.run([cc, "-march=native", "-c", f.name, "-o", "/dev/null"],
                               capture_output=True)
    return ["-march=native"] if probe.returncode == 0 else []


setup(ext_modules=extensions(), cmdclass={"build_ext": optional_build_ext})
