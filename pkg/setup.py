from setuptools import Extension, setup

# The compiled kernel module is optional: desocial._kernels falls back to a
# numpy implementation when the extension is missing (or when
# DESOCIAL_KERNELS=python is set).
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "desocial._kernels._core",
                ["src/desocial/_kernels/_core.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
