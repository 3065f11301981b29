"""Weighted almost periodic analysis on the integer and real lines.

Submodules: ``weights``, ``polycalc``, ``ergodic``, ``almostper``,
``spectrum``, ``evolution``, ``linalg`` and the ``cli`` front end.
"""

from .almostper import TrigPoly
from .evolution import DiffOp, MatrixOp, RecurrenceOp
from .polycalc import GroupPoly, Signal
from .weights import INTEGER, REAL, PolynomialGrowth

__all__ = ["TrigPoly", "DiffOp", "MatrixOp", "RecurrenceOp", "GroupPoly", "Signal",
           "INTEGER", "REAL", "PolynomialGrowth"]
__version__ = "0.1.0"
