"""Relative-base address chaining and exit-point error detection for a mini SSA IR.

The package rewrites structured address computations (``gep``) so that every
address on a given array base is derived from the previously computed one,
inserts detectors at function exits, and provides a fault-injecting
interpreter plus campaign harness to measure the effect.
"""

from .ir import Function, IRError, parse_ir, print_ir, validate

__version__ = "0.1.0"

__all__ = ["Function", "IRError", "parse_ir", "print_ir", "validate", "__version__"]
