#!/usr/bin/env python3
"""
Package setup for CARMA indirect inference.

    pip install -e .
    carma-indirect run experiment_config.yaml
"""

from setuptools import find_namespace_packages, setup

setup(
    name="carma-indirect",
    version="0.1.0",
    description="Robust indirect inference for sampled CARMA processes",
    python_requires=">=3.11",
    py_modules=["config_manager"],
    packages=find_namespace_packages(include=["src", "src.*", "main"]),
    install_requires=[
        "numpy",
        "scipy",
        "pandas",
        "pyyaml",
        "matplotlib",
    ],
    extras_require={"test": ["pytest"]},
    entry_points={
        "console_scripts": [
            "carma-indirect=main.carma_indirect:main",
        ],
    },
)
