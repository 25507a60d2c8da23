#!/usr/bin/env python
# -*- coding: utf-8 -*-
from setuptools import setup, find_packages

setup(
    name="collapsed_lpcm",
    version=open('collapsed_lpcm/__version__').read().strip(),
    description="Collapsed MCMC for the latent position cluster model of social networks.",
    long_description=open('README.rst').read(),
    long_description_content_type='text/x-rst',
    packages=find_packages(exclude=['tests']),
    include_package_data=True,
    package_data={'collapsed_lpcm': ['__version__', 'data/*.md', 'data/*.edges']},
    install_requires=[
        'numpy',
        'scipy',
        'scikit-learn',
        'networkx',
        'pandas',
        'tqdm',
    ],
    extras_require={
        'demos': ['matplotlib'],
        'test': ['pytest'],
    },
    entry_points={
        'console_scripts': ['collapsed-lpcm=collapsed_lpcm.cli:main'],
    },
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
    python_requires='>=3.8',
)
