"""Truncation varieties of the coupled cluster exponential parameterization.

Submodules:

- ``combinatorics``: orbital index sets, even set partitions, signs
- ``fd_algebra``: Fermi-Dirac words, normal ordering, Jordan-Wigner matrices
- ``multipoly``: sparse multivariate polynomials and compiled batch evaluation
- ``expparam``: the exponential map, master polynomials and its inverse
- ``truncation``: level sets, linearity, families, chart ideals
- ``ccsystem``: CC equations as square polynomial systems
- ``homotopy``: path tracking, total-degree and monodromy solving
- ``cli``: the ``fockcc`` command
"""

__version__ = "0.1.0"

from .ccsystem import CCSystem, assemble_cc_system, assemble_degree_system, random_hamiltonian
from .errors import (
    BindingError,
    CapacityError,
    FamilyError,
    FockCCError,
    LevelSetParseError,
    ParityError,
    SeedError,
    ShapeError,
)
from .expparam import forward_map, inverse_coordinate, master_polynomial, numeric_forward, psi_coordinate
from .fd_algebra import normal_order, verify_groebner
from .homotopy import TrackerConfig, cc_degree, monodromy_solve, total_degree_solve, variety_degree
from .multipoly import PolynomialSystem, SparsePolynomial
from .truncation import FLAG, SPINOR, LevelSet, analyze, census, dimension, is_linear

__all__ = [
    "__version__",
    "BindingError", "CapacityError", "FamilyError", "FockCCError", "LevelSetParseError", "ParityError",
    "SeedError", "ShapeError",
    "normal_order", "verify_groebner",
    "SparsePolynomial", "PolynomialSystem",
    "forward_map", "inverse_coordinate", "master_polynomial", "numeric_forward", "psi_coordinate",
    "FLAG", "SPINOR", "LevelSet", "analyze", "census", "dimension", "is_linear",
    "CCSystem", "assemble_cc_system", "assemble_degree_system", "random_hamiltonian",
    "TrackerConfig", "cc_degree", "variety_degree", "total_degree_solve", "monodromy_solve",
]
