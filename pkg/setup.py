"""Build script for the optional compiled selection core.

The package is fully functional without the extension; select.py falls back
to the numpy implementation when lddr._select_core is missing. The core is
always built from source on the installing host, so it probes -march=native
to unlock FMA/AVX for the dot-product kernels, dropping the flag when the
toolchain rejects it.
"""

import os
import tempfile

from setuptools import Extension, setup


def _compiles_with(flags):
    import distutils.ccompiler
    import distutils.errors

    cc = distutils.ccompiler.new_compiler()
    with tempfile.TemporaryDirectory() as tmp:
        src = os.path.join(tmp, "probe.c")
        with open(src, "w") as fh:
            fh.write("int main(void) { return 0; }\n")
        try:
            cc.compile([src], output_dir=tmp, extra_postargs=flags)
        except distutils.errors.CompileError:
            return False
    return True


ext_modules = []
try:
    from Cython.Build import cythonize

    flags = ["-O3", "-funsafe-math-optimizations", "-fno-math-errno"]
    if _compiles_with(flags + ["-march=native"]):
        flags.append("-march=native")
    ext_modules = cythonize(
        [Extension("lddr._select_core", ["src/lddr/_select_core.pyx"],
                   extra_compile_args=flags)],
        language_level="3",
    )
except Exception as exc:  # pragma: no cover - build-env dependent
    print(f"warning: skipping compiled core ({exc}); pure-python fallback will be used")

setup(ext_modules=ext_modules)
