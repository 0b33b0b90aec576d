"""odequiv: symbolic equivalence solver for second-order ODEs.

Matches y'' = f(x, y, y') with rational f against a table of target
equations by symmetry signatures and Cartan-invariant necessary forms,
returning the target plus a symbolically verified change of coordinates.
"""

__version__ = "0.1.0"
