"""Group-decorated walks on graphs: exact walk distributions, twisted transfer
operators, effective shrinkage bounds, and mod-p irreducibility experiments."""

from .errors import CapabilityError, ConvergenceError, DecowalkError, DomainError, ResourceLimitError
from .groups import (CyclicGroup, DihedralGroup, DirectProduct, FiniteGroup, GroupElement, MatrixGroup,
                     SpecialLinearGroup, SymmetricGroup, group_from_descriptor)
from .graphwalk import DecoratedGraph, complete_graph_with_loops, walk_distribution

__version__ = "0.1.0"
