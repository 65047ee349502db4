"""Reliability of open quantum systems from trajectory weights.

Submodules:

``numkernel``   dense linear algebra helpers and the matrix text format
``structure``   parser for structure-function expressions
``events``      projectors and compilation of structure functions
``dynamics``    Lindblad generators, propagators and channels
``histories``   trajectories, chain kets, consistency and reliability curves
``apparatus``   counter (apparatus) density matrices, lifetimes and entropies
``flipcode``    the three-qubit bit-flip storage example
``cli``         ``qreliability`` command-line tool
"""
from ._kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
