"""Progressive mesh unfolding.

Simplify a triangle mesh by edge collapses, unfold the coarse mesh with a
tabu-search unfolder, then undo the collapses one by one while keeping the
net overlap-free.
"""

from .mesh import HalfEdgeMesh, MeshError, MeshFormatError, load_mesh, save_mesh, validate

__all__ = ["HalfEdgeMesh", "MeshError", "MeshFormatError", "load_mesh", "save_mesh", "validate"]
