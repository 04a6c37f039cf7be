#!/usr/bin/env python

from setuptools import setup, find_packages

setup(name='holonomic_optics',
      version='1.0',
      packages=find_packages(exclude=['tests']),
      install_requires=['numpy>=1.22', 'scipy>=1.9'],
     )
