"""Build script for the optional compiled stepping kernel.

The package works without the extension (a pure-Python kernel is selected at
import time), but the compiled kernel is what delivers the advertised
throughput. -ffp-contract=off keeps the C arithmetic bit-identical to the
Python fallback (no FMA contraction).
"""

import os

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None and os.path.exists("src/voltyard/backends/_kernel.pyx"):
    extensions = cythonize(
        [
            Extension(
                "voltyard.backends._kernel",
                ["src/voltyard/backends/_kernel.pyx"],
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )
else:
    extensions = []

setup(
    ext_modules=extensions,
    # keep legacy setup.py-based installs working with the src layout
    package_dir={"": "src"},
    packages=["voltyard", "voltyard.backends"],
)
