import os
from setuptools import find_packages, setup

here = os.path.dirname(os.path.abspath(__file__))
version_info = {}
with open(os.path.join(here, "drhpe", "_version.py")) as f:
    exec(f.read(), version_info)
version = version_info["__version__"]

classifiers = [
    "Development Status :: 3 - Alpha",
    "License :: OSI Approved :: Apache Software License",
    "Natural Language :: English",
    "Operating System :: OS Independent",
    "Programming Language :: Python",
    "Programming Language :: Python :: 3",
    "Programming Language :: Python :: 3.8",
    "Programming Language :: Python :: 3.9",
    "Programming Language :: Python :: 3.10",
    "Topic :: Scientific/Engineering :: Mathematics",
]

with open("README.md") as f:
    long_description = f.read()

with open("requirements.txt") as f:
    requirements = f.readlines()
install_requires = [r.strip() for r in requirements if r.strip()]

with open("dev-requirements.txt") as f:
    dev_requirements = f.readlines()
install_requires_dev = [r.strip() for r in dev_requirements if r.strip()]

setup(
    name="drhpe",
    version=version,
    description="Dynamically regularized ADMM with per-iteration certification",
    long_description=long_description,
    long_description_content_type="text/markdown",
    license="Apache 2",
    platforms="any",
    classifiers=classifiers,
    python_requires=">=3.8",
    packages=find_packages(exclude=["tests"]),
    include_package_data=True,
    install_requires=install_requires,
    extras_require={"dev": install_requires_dev},
    scripts=["bin/drhpe"],
)
