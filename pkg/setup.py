"""
Setup script for noisy-kaczmarz

Kept for tools that still call setup.py directly. pyproject.toml is the
primary configuration file and setuptools reads it automatically.
"""

from setuptools import setup

setup()
