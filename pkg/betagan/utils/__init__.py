"""
Utility modules for betagan.
"""

from .csv_io import read_matrix, write_matrix, write_rows
from .progress import ProgressReporter

__all__ = [
    "ProgressReporter",
    "read_matrix",
    "write_matrix",
    "write_rows",
]
