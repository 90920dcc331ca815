from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("dirichlet_heat._kernels", ["src/dirichlet_heat/_kernels.pyx"])],
        language_level=3,
    )

setup(ext_modules=ext_modules)
