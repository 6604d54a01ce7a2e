"""
Numerical kernels: Lambert W, the learning-rate schedule and its bound,
row-matrix storage and row sampling.
"""
