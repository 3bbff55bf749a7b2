#!/usr/bin/env python
# -*- coding: utf-8 -*-
import os
from typing import Dict

from setuptools import setup

here = os.path.abspath(os.path.dirname(__file__))

# To update the package version number, edit fewSUM/__version__.py
version: Dict[str, str] = {}
version_path = os.path.join(here, 'fewSUM', '__version__.py')
with open(version_path, encoding='utf-8') as f:
    exec(f.read(), version)

with open('README.rst', encoding='utf-8') as readme_file:
    readme = readme_file.read()

build_require = [
    'twine',
    'wheel'
]

tests_require = [
    'pytest>=5.4.0',
    'pytest-cov',
    'flake8>=3.8.0',
    'pyflakes>=2.1.1',
    'pytest-flake8>=1.0.6',
    'pydocstyle>=5.0.0',
    'pytest-pydocstyle>=2.1',
    'pytest-mypy>=0.6.2',
    'hypothesis>=5.0',
]
tests_require += build_require

setup(
    name='Few-SUM',
    version=version['__version__'],
    description='Few-shot opinion summarization with a property-conditioned encoder-generator.',
    long_description=f'{readme}\n\n',
    packages=[
        'fewSUM',
        'fewSUM.data'
    ],
    package_dir={'fewSUM': 'fewSUM'},
    include_package_data=True,
    license='GNU Lesser General Public License v3 or later',
    zip_safe=False,
    keywords=[
        'summarization',
        'opinion-summarization',
        'nlp',
        'transformer',
        'few-shot',
        'python-3',
        'python-3-8',
        'python-3-9',
    ],
    package_data={
        'fewSUM': [
            'py.typed',
            'data/*.yaml'
        ]
    },
    entry_points={
        'console_scripts': ['fewsum=fewSUM.cli:main']
    },
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: GNU Lesser General Public License',
        'Natural Language :: English',
        'Operating System :: Unix',
        'Operating System :: MacOS',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Topic :: Scientific/Engineering :: Artificial Intelligence',
        'Topic :: Text Processing :: Linguistic',
        'Typing :: Typed'
    ],
    test_suite='tests',
    python_requires='>=3.8',
    install_requires=[
        'h5py',
        'numpy',
        'pandas',
        'Nano-Utils>=0.4.3',
        'AssertionLib>=2.2.0',
        'torch>=1.10',
        'scikit-learn',
        'PyYAML',
    ],
    setup_requires=[
        'pytest-runner'
    ],
    tests_require=tests_require,
    extras_require={
        'test': tests_require,
        'build': build_require
    }
)
