from pathlib import Path

from setuptools import find_packages, setup

# Version lives in thinprobe/version.py; read it without importing the package
_version = {}
exec((Path(__file__).parent / "thinprobe" / "version.py").read_text(encoding="utf-8"), _version)

setup(
    name="thinprobe",
    version=_version["PIP_VERSION"],
    description="Thin-domain CGO probe lab: integral identities, scaling sweeps and stability checks",
    packages=find_packages(include=["thinprobe", "thinprobe.*"]),
    install_requires=[
        "numpy>=1.24",
        "scipy>=1.10",
        "sympy>=1.12",
        "pyyaml>=6.0",
        "jsonschema>=4.18",
        "joblib>=1.3",
    ],
    entry_points={"console_scripts": ["thinprobe=thinprobe.cli:main"]},
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    python_requires=">=3.10",
)
