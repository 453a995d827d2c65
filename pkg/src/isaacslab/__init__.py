"""Numerical laboratory for Isaacs-type parabolic equations.

Sup-inf affine representation of uniformly elliptic operators, monotone
explicit time-marching for cutoff equations, parabolic Holder and
oscillation measurement, and boundary-data mollification with barrier
estimates.  See the demos/ directory for narrative walkthroughs and the
`isaacslab` command line for the experiment harness.
"""

from . import core, mollify, norms, operators, representation, solver

__version__ = "0.1.0"

__all__ = ["core", "representation", "operators", "norms", "mollify", "solver"]
