"""Conforming simplicial meshes of the unit square and cube.

Uniform red refinement splits every triangle into four congruent children
and every tetrahedron into eight children following Bey's vertex-ordering
scheme. Started from the Kuhn triangulation of the cube this produces only
finitely many similarity classes, so the chunkiness stays bounded.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from math import factorial

import numpy as np

__all__ = [
    "SimplicialMesh",
    "initial_mesh_2d",
    "initial_mesh_3d",
    "initial_mesh",
    "red_refine",
    "refine_to_level",
    "chunkiness",
    "check_conformity",
]

_LOCAL_EDGES = {
    2: np.array([[0, 1], [0, 2], [1, 2]]),
    3: np.array([[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]]),
}


@dataclass(frozen=True, eq=False)
class SimplicialMesh:
    """Immutable simplicial mesh.

    Attributes
    ----------
    vertices : (nv, dim) array
    cells : (nc, dim + 1) array of vertex indices, positively oriented
    level : number of red refinements applied to the initial mesh
    ordered_cells : cells in the vertex order used by the refinement rule;
        identical to ``cells`` up to a per-cell permutation
    """

    vertices: np.ndarray
    cells: np.ndarray
    level: int = 0
    ordered_cells: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.ordered_cells is None:
            object.__setattr__(self, "ordered_cells", self.cells)
        for arr in (self.vertices, self.cells, self.ordered_cells):
            arr.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def cell_coordinates(self) -> np.ndarray:
        """Vertex coordinates per cell, shape ``(nc, dim + 1, dim)``."""
        return self.vertices[self.cells]

    @cached_property
    def jacobians(self) -> np.ndarray:
        X = self.cell_coordinates()
        return np.swapaxes(X[:, 1:] - X[:, :1], 1, 2)

    @cached_property
    def signed_volumes(self) -> np.ndarray:
        return np.linalg.det(self.jacobians) / factorial(self.dim)

    @property
    def volumes(self) -> np.ndarray:
        return np.abs(self.signed_volumes)

    @cached_property
    def _edge_data(self):
        loc = _LOCAL_EDGES[self.dim]
        pairs = np.sort(self.cells[:, loc], axis=2).reshape(-1, 2)
        edges, inverse = np.unique(pairs, axis=0, return_inverse=True)
        return edges, inverse.reshape(self.n_cells, len(loc))

    @property
    def edges(self) -> np.ndarray:
        """Unique edges as sorted vertex pairs."""
        return self._edge_data[0]

    @property
    def cell_edges(self) -> np.ndarray:
        """Edge indices per cell, in the local order of ``_LOCAL_EDGES``."""
        return self._edge_data[1]

    @cached_property
    def _facet_data(self):
        d = self.dim
        faces, opposite = [], []
        for i in range(d + 1):
            idx = [j for j in range(d + 1) if j != i]
            faces.append(self.cells[:, idx])
            opposite.append(self.cells[:, i])
        faces = np.concatenate(faces)
        opposite = np.concatenate(opposite)
        keys = np.sort(faces, axis=1)
        uniq, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
        return faces, opposite, uniq, inverse.ravel(), counts

    @cached_property
    def boundary_facets(self) -> np.ndarray:
        """Facets lying on exactly one cell, outward oriented.

        In 2D the edges are traversed counterclockwise around the domain; in
        3D the right-hand normal (v1 - v0) x (v2 - v0) points outward.
        """
        faces, opposite, _, inverse, counts = self._facet_data
        once = counts[inverse] == 1
        f = faces[once].copy()
        opp = opposite[once]
        X = self.vertices
        mats = np.concatenate([X[f[:, 1:]] - X[f[:, :1]], (X[opp] - X[f[:, 0]])[:, None, :]], axis=1)
        sign = np.linalg.det(mats)
        flip = sign < 0 if self.dim == 2 else sign > 0
        f[flip, 0], f[flip, 1] = f[flip, 1].copy(), f[flip, 0].copy()
        return f

    @cached_property
    def boundary_vertices(self) -> np.ndarray:
        return np.unique(self.boundary_facets)

    @cached_property
    def diameters(self) -> np.ndarray:
        X = self.cell_coordinates()
        loc = _LOCAL_EDGES[self.dim]
        lengths = np.linalg.norm(X[:, loc[:, 0]] - X[:, loc[:, 1]], axis=2)
        return lengths.max(axis=1)

    @property
    def h(self) -> float:
        """Maximal cell diameter."""
        return float(self.diameters.max())

    @cached_property
    def inball_diameters(self) -> np.ndarray:
        """Diameter of the largest inscribed ball, ``2 d |K| / |dK|``."""
        X = self.cell_coordinates()
        d = self.dim
        area = np.zeros(self.n_cells)
        for i in range(d + 1):
            idx = [j for j in range(d + 1) if j != i]
            F = X[:, idx]
            E = F[:, 1:] - F[:, :1]
            if d == 2:
                area += np.linalg.norm(E[:, 0], axis=1)
            else:
                area += 0.5 * np.linalg.norm(np.cross(E[:, 0], E[:, 1]), axis=1)
        return 2.0 * d * self.volumes / area


def initial_mesh_2d() -> SimplicialMesh:
    """Unit square split into four triangles along both diagonals."""
    vertices = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]])
    cells = np.array([[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]])
    return SimplicialMesh(vertices, cells, 0)


def initial_mesh_3d() -> SimplicialMesh:
    """Kuhn triangulation of the unit cube into six tetrahedra.

    Each tetrahedron is ``conv{0, e_s0, e_s0 + e_s1, (1, 1, 1)}`` for a
    permutation ``s``; the identity permutation gives
    ``conv{0, e1, e1 + e2, e1 + e2 + e3}``.
    """
    corners = np.array(list(itertools.product([0.0, 1.0], repeat=3)))[:, ::-1]
    index = {tuple(c): i for i, c in enumerate(corners)}
    ordered = []
    for perm in itertools.permutations(range(3)):
        x = np.zeros(3)
        path = [index[tuple(x)]]
        for axis in perm:
            x = x.copy()
            x[axis] = 1.0
            path.append(index[tuple(x)])
        ordered.append(path)
    ordered = np.array(ordered)
    return SimplicialMesh(corners, _orient(corners, ordered), 0, ordered)


def initial_mesh(dim: int) -> SimplicialMesh:
    if dim == 2:
        return initial_mesh_2d()
    if dim == 3:
        return initial_mesh_3d()
    raise ValueError(f"unsupported dimension {dim}")


def _orient(vertices, cells):
    X = vertices[cells]
    det = np.linalg.det(np.swapaxes(X[:, 1:] - X[:, :1], 1, 2))
    out = cells.copy()
    neg = det < 0
    out[neg, -2], out[neg, -1] = cells[neg, -1], cells[neg, -2]
    return out


def red_refine(m: SimplicialMesh) -> SimplicialMesh:
    """One level of uniform red refinement.

    New vertices are the edge midpoints, identified through the global edge
    numbering so that neighbouring cells share them exactly.
    """
    d = m.dim
    cells = m.ordered_cells
    loc = _LOCAL_EDGES[d]
    pairs = np.sort(cells[:, loc], axis=2)
    flat = pairs.reshape(-1, 2)
    edges, inv = np.unique(flat, axis=0, return_inverse=True)
    inv = inv.reshape(len(cells), len(loc))
    nv = m.n_vertices
    mids = 0.5 * (m.vertices[edges[:, 0]] + m.vertices[edges[:, 1]])
    vertices = np.vstack([m.vertices, mids])
    mid = nv + inv  # midpoint vertex index per local edge

    if d == 2:
        x0, x1, x2 = cells.T
        m01, m02, m12 = mid.T
        children = [
            (x0, m01, m02),
            (m01, x1, m12),
            (m02, m12, x2),
            (m01, m12, m02),
        ]
    else:
        x0, x1, x2, x3 = cells.T
        m01, m02, m03, m12, m13, m23 = mid.T
        # Bey's ordering; the interior octahedron is cut along m02-m13
        children = [
            (x0, m01, m02, m03),
            (m01, x1, m12, m13),
            (m02, m12, x2, m23),
            (m03, m13, m23, x3),
            (m01, m02, m03, m13),
            (m01, m02, m12, m13),
            (m02, m03, m13, m23),
            (m02, m12, m13, m23),
        ]
    # child-major per parent: cell k produces rows 2^d k ... 2^d k + 2^d - 1
    ordered = np.stack([np.stack(c, axis=1) for c in children], axis=1).reshape(-1, d + 1)
    return SimplicialMesh(vertices, _orient(vertices, ordered), m.level + 1, ordered)


def refine_to_level(m: SimplicialMesh, level: int) -> SimplicialMesh:
    while m.level < level:
        m = red_refine(m)
    return m


def chunkiness(m: SimplicialMesh) -> float:
    """max_K h_K / rho_K with rho_K the inscribed-ball diameter."""
    return float(np.max(m.diameters / m.inball_diameters))


def check_conformity(m: SimplicialMesh, tol: float = 0.0) -> bool:
    """Facet-matching test for a mesh of the unit cube.

    Every facet must belong to one or two cells, facets of a single cell must
    lie on the boundary of ``(0, 1)^d``, no vertex may be duplicated, and all
    cells must be positively oriented.
    """
    if np.any(m.signed_volumes <= 0):
        return False
    if len(np.unique(m.vertices, axis=0)) != m.n_vertices:
        return False
    _, _, _, _, counts = m._facet_data
    if np.any(counts > 2):
        return False
    X = m.vertices[m.boundary_facets]
    on_face = np.zeros(len(X), dtype=bool)
    for axis in range(m.dim):
        for val in (0.0, 1.0):
            on_face |= np.all(np.abs(X[:, :, axis] - val) <= tol, axis=1)
    return bool(np.all(on_face))
