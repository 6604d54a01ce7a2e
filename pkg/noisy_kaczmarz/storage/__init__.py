"""
File formats for matrices and problems.
"""

from noisy_kaczmarz.storage.matrix_io import (
    ProblemSidecar,
    read_matrix,
    read_problem,
    write_matrix,
    write_problem,
)

__all__ = [
    "ProblemSidecar",
    "read_matrix",
    "read_problem",
    "write_matrix",
    "write_problem",
]
