"""Dirichlet-to-Neumann maps of triangulated surfaces with one boundary circle.

Discrete DN operators, the boundary Hilbert transform and its defect,
genus detection from boundary data, Schottky doubles, conformal moduli of
handle annuli and a planar Beltrami solver.
"""

__version__ = "0.1.0"

from .boundary import BoundaryFunction, BoundaryOperator  # noqa: E402
from .dn import (DnMatrix, defect_operator, dn_distance, dn_matrix,  # noqa: E402
                 estimate_genus, hilbert_transform)
from .mesh import (TriangleMesh, attach_handle, euler_genus, make_flat_disk,  # noqa: E402
                   make_torus_with_hole, schottky_double)

__all__ = ["BoundaryFunction", "BoundaryOperator", "DnMatrix", "TriangleMesh",
           "attach_handle", "defect_operator", "dn_distance", "dn_matrix", "estimate_genus",
           "euler_genus", "hilbert_transform", "make_flat_disk", "make_torus_with_hole",
           "schottky_double"]
