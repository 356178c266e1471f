import os
import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeExtension(Extension):
    def __init__(self, name, sourcedir=""):
        super().__init__(name, sources=[])
        self.sourcedir = os.fspath(Path(sourcedir).resolve())


class CMakeBuild(build_ext):
    def build_extension(self, ext):
        extdir = Path(self.get_ext_fullpath(ext.name)).parent.resolve()
        build_temp = Path(self.build_temp) / ext.name
        build_temp.mkdir(parents=True, exist_ok=True)

        import pybind11

        cfg = "Release"
        cmake_args = [
            f"-DCMAKE_LIBRARY_OUTPUT_DIRECTORY={extdir}{os.sep}",
            f"-DPYTHON_EXECUTABLE={sys.executable}",
            f"-Dpybind11_DIR={pybind11.get_cmake_dir()}",
            f"-DCMAKE_BUILD_TYPE={cfg}",
            "-DALIGNMARKET_BUILD_TESTS=OFF",
            "-DALIGNMARKET_BUILD_PYTHON=ON",
        ]
        subprocess.run(
            ["cmake", ext.sourcedir, *cmake_args], cwd=build_temp, check=True
        )
        subprocess.run(
            ["cmake", "--build", ".", "--target", "_core", "-j2"],
            cwd=build_temp,
            check=True,
        )
        # The cmake target drops the module in <build>/python/alignmarket; the
        # LIBRARY_OUTPUT_DIRECTORY override above is ignored by that property,
        # so copy whatever was produced into the wheel layout.
        produced = list((build_temp / "python" / "alignmarket").glob("_core*"))
        extdir.mkdir(parents=True, exist_ok=True)
        for f in produced:
            self.copy_file(f, extdir / f.name)


setup(
    ext_modules=[CMakeExtension("alignmarket._core")],
    cmdclass={"build_ext": CMakeBuild},
    zip_safe=False,
)
