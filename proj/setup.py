import os
import subprocess
import sys
from pathlib import Path

from setuptools import setup
from setuptools.command.build_ext import build_ext
from setuptools.extension import Extension


class CMakeExtension(Extension):
    def __init__(self, name):
        super().__init__(name, sources=[])


class CMakeBuild(build_ext):
    """Drive the CMake tree so the wheel and the standalone build stay one."""

    def build_extension(self, ext):
        source_dir = Path(__file__).resolve().parent
        build_dir = Path(self.build_temp) / "cmake"
        build_dir.mkdir(parents=True, exist_ok=True)
        out_dir = Path(self.get_ext_fullpath(ext.name)).resolve().parent

        cfg = "Release"
        args = [
            "cmake",
            "-S", str(source_dir),
            "-B", str(build_dir),
            f"-DCMAKE_BUILD_TYPE={cfg}",
            "-DSIMGAP_BUILD_PYTHON=ON",
            "-DSIMGAP_BUILD_CLI=OFF",
            "-DSIMGAP_BUILD_TESTS=OFF",
            f"-DPYTHON_EXECUTABLE={sys.executable}",
        ]
        if os.environ.get("CMAKE_GENERATOR") is None and _have("ninja"):
            args += ["-G", "Ninja"]
        subprocess.run(args, check=True)
        subprocess.run(["cmake", "--build", str(build_dir), "--target", "_simgap"], check=True)

        built = list((build_dir / "src").glob("_simgap*.so"))
        if not built:
            raise RuntimeError("extension module was not produced by the cmake build")
        out_dir.mkdir(parents=True, exist_ok=True)
        target = Path(self.get_ext_fullpath(ext.name))
        target.write_bytes(built[0].read_bytes())


def _have(tool):
    from shutil import which

    return which(tool) is not None


setup(
    packages=["simgap"],
    package_dir={"simgap": "python/simgap"},
    ext_modules=[CMakeExtension("simgap._simgap")],
    cmdclass={"build_ext": CMakeBuild},
    zip_safe=False,
)
