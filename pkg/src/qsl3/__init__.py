"""Exact engine for idempotented quantum sl3, its string-diagram calculus,
and the trace map from diagrams back to the algebra.

Modules
-------
laurent   exact Z[q, q^-1] arithmetic and quantum-integer combinatorics
pbw       independent normal-form oracle for the algebra (PBW-style words)
algebra   the idempotented algebra in its canonical-monomial basis
diagram   string diagrams: signatures, slices, validation, degrees, IO
rewrite   graded local rewriting of diagrams down to a spanning basis
trace     the trace projection and the decategorification map
cli       command-line entry points
"""

from qsl3.laurent import Laurent, RationalFunction, qbinom, qfact, qint

__all__ = ["Laurent", "RationalFunction", "qint", "qfact", "qbinom"]
