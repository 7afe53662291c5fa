"""Dnflow package definition and install configuration"""

# Copyright (c) 2026 dnflow developers.
#
# This is free software released under the MIT License.  See `LICENSE`
# for details.


import setuptools

import dnflow


# Extract the short and long descriptions from the documentation
_desc_paragraphs = dnflow.__doc__.strip().split('\n\n')
# Make sure to keep the short description to a single line
_desc_short = _desc_paragraphs[0].replace('\n', ' ')
# Include the package documentation in the long description except for
# the short description and the copyright block at the end
_desc_long = '\n\n'.join(_desc_paragraphs[1:-3])


# Define package attributes
setuptools.setup(

    # Basics
    name='dnflow',
    version=dnflow.__version__,
    license='MIT',
    author='dnflow developers',

    # Description
    description=_desc_short,
    long_description=_desc_long,
    keywords=[
        'finite elements',
        'Navier-Stokes',
        'optimal control',
        'open boundary conditions',
    ],
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: MIT License',
        'Natural Language :: English',
        'Operating System :: OS Independent',
        'Programming Language :: Python :: 3 :: Only',
        'Topic :: Scientific/Engineering :: Mathematics',
        'Topic :: Scientific/Engineering :: Physics',
    ],
    platforms=['any'],

    # Requirements
    python_requires='>=3.8',
    install_requires=[
        'numpy>=1.17',
        'scipy>=1.4',
    ],

    # API
    packages=setuptools.find_packages(),
    entry_points={
        'console_scripts': ['dnflow = dnflow.cli:main'],
    },

)
