"""
Test suite for noisy-kaczmarz.
"""
