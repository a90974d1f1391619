import re

from setuptools import setup, find_packages

DEV_TOOLS = {"pytest", "pytest-cov", "black", "isort", "mypy"}

# Read requirements
with open('requirements.txt') as f:
    requirements = [line.split('#')[0].strip() for line in f.read().splitlines()]
    requirements = [line for line in requirements if line]


def _project(requirement):
    return re.split(r"[<>=!~\[; ]", requirement, maxsplit=1)[0].lower()


install_requires = [r for r in requirements if _project(r) not in DEV_TOOLS]
dev_requires = [r for r in requirements if _project(r) in DEV_TOOLS]

setup(
    name="homreg",
    version="0.1.0",
    description="Decide whether the homomorphic image of a weighted tree automaton over the rationals is regular",
    author="homreg Team",
    author_email="example@example.com",
    python_requires=">=3.9",
    packages=find_packages(include=["src", "src.*"]),
    install_requires=install_requires,
    extras_require={"dev": dev_requires},
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
    ],
    entry_points={
        "console_scripts": [
            "homreg=src.main:main",
        ],
    },
)
