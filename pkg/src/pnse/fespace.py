"""MINI and Taylor-Hood mixed spaces on simplicial meshes.

Velocity coefficients are stored component-blocked: the degree of freedom of
scalar node ``n`` in component ``c`` has global index ``c * n_scalar + n``.
Pressure coefficients follow the velocity block and one extra slot holds the
Lagrange multiplier of the zero-mean constraint.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .mesh import SimplicialMesh
from .quadrature import QuadratureRule

__all__ = [
    "MixedSpace",
    "BasisTable",
    "build_space",
    "tabulate",
    "apply_dirichlet",
    "interpolate_velocity",
    "interpolate_pressure",
    "reference_velocity_basis",
    "reference_pressure_basis",
]

KINDS = ("mini", "taylor-hood")


def _normalize_kind(kind: str) -> str:
    k = kind.lower().replace("_", "-").replace(" ", "-")
    if k in ("th", "taylorhood"):
        k = "taylor-hood"
    if k not in KINDS:
        raise ValueError(f"unsupported element kind {kind!r}")
    return k


@dataclass(frozen=True, eq=False)
class MixedSpace:
    mesh: SimplicialMesh
    kind: str
    cell_nodes: np.ndarray  # (nc, nloc) scalar velocity node per local basis function
    node_coords: np.ndarray  # (n_scalar, dim)
    boundary_nodes: np.ndarray  # scalar nodes located on the boundary

    @property
    def dim(self) -> int:
        return self.mesh.dim

    @property
    def n_scalar(self) -> int:
        return len(self.node_coords)

    @property
    def n_velocity(self) -> int:
        return self.dim * self.n_scalar

    @property
    def n_pressure(self) -> int:
        return self.mesh.n_vertices

    @property
    def n_total(self) -> int:
        return self.n_velocity + self.n_pressure + 1

    @property
    def pressure_slice(self) -> slice:
        return slice(self.n_velocity, self.n_velocity + self.n_pressure)

    @property
    def multiplier_index(self) -> int:
        return self.n_velocity + self.n_pressure

    @property
    def n_local(self) -> int:
        return self.cell_nodes.shape[1]

    @cached_property
    def boundary_velocity_dofs(self) -> np.ndarray:
        nb = self.boundary_nodes
        return np.concatenate([c * self.n_scalar + nb for c in range(self.dim)])

    @cached_property
    def cell_velocity_dofs(self) -> np.ndarray:
        """Global velocity indices, shape ``(nc, nloc, dim)``."""
        return self.cell_nodes[:, :, None] + self.n_scalar * np.arange(self.dim)

    @property
    def cell_pressure_dofs(self) -> np.ndarray:
        return self.n_velocity + self.mesh.cells


def build_space(mesh: SimplicialMesh, kind: str) -> MixedSpace:
    """Number the degrees of freedom of a MINI or Taylor-Hood pair."""
    kind = _normalize_kind(kind)
    if mesh.dim not in (2, 3):
        raise ValueError(f"unsupported dimension {mesh.dim}")
    nv = mesh.n_vertices
    verts = mesh.vertices
    bverts = mesh.boundary_vertices
    if kind == "mini":
        bubbles = nv + np.arange(mesh.n_cells)
        cell_nodes = np.hstack([mesh.cells, bubbles[:, None]])
        coords = np.vstack([verts, verts[mesh.cells].mean(axis=1)])
        bnodes = bverts
    else:
        edges = mesh.edges
        cell_nodes = np.hstack([mesh.cells, nv + mesh.cell_edges])
        coords = np.vstack([verts, 0.5 * (verts[edges[:, 0]] + verts[edges[:, 1]])])
        on_bnd = np.zeros(nv, dtype=bool)
        on_bnd[bverts] = True
        # an edge is on the boundary iff it belongs to a boundary facet
        bf = mesh.boundary_facets
        d = mesh.dim
        pairs = [np.sort(bf[:, [i, j]], axis=1) for i in range(d) for j in range(i + 1, d)]
        bedges = np.unique(np.vstack(pairs), axis=0)
        edge_ids = _lookup_rows(edges, bedges)
        bnodes = np.concatenate([bverts, nv + edge_ids])
    for arr in (cell_nodes, coords, bnodes):
        arr.setflags(write=False)
    return MixedSpace(mesh, kind, cell_nodes, coords, np.sort(bnodes))


def _lookup_rows(table, rows):
    # indices of ``rows`` inside the lexicographically sorted unique ``table``
    view = lambda a: np.ascontiguousarray(a).view([("", a.dtype)] * a.shape[1]).ravel()
    idx = np.searchsorted(view(table), view(rows))
    if not np.array_equal(table[idx], rows):
        raise KeyError("row not found")
    return idx


def reference_velocity_basis(kind: str, dim: int, lam: np.ndarray):
    """Scalar velocity shape functions in barycentric coordinates.

    Returns values ``(nq, nloc)`` and derivatives with respect to the
    barycentric coordinates ``(nq, nloc, dim + 1)``.
    """
    kind = _normalize_kind(kind)
    lam = np.asarray(lam, dtype=float)
    nq, nb = lam.shape
    if kind == "mini":
        vals = np.empty((nq, nb + 1))
        dl = np.zeros((nq, nb + 1, nb))
        vals[:, :nb] = lam
        dl[:, np.arange(nb), np.arange(nb)] = 1.0
        scale = float(nb**nb)  # equals one at the barycentre
        vals[:, nb] = scale * np.prod(lam, axis=1)
        for i in range(nb):
            others = [j for j in range(nb) if j != i]
            dl[:, nb, i] = scale * np.prod(lam[:, others], axis=1)
        return vals, dl
    pairs = [(i, j) for i in range(nb) for j in range(i + 1, nb)]
    n = nb + len(pairs)
    vals = np.empty((nq, n))
    dl = np.zeros((nq, n, nb))
    for i in range(nb):
        vals[:, i] = lam[:, i] * (2.0 * lam[:, i] - 1.0)
        dl[:, i, i] = 4.0 * lam[:, i] - 1.0
    for e, (i, j) in enumerate(pairs):
        vals[:, nb + e] = 4.0 * lam[:, i] * lam[:, j]
        dl[:, nb + e, i] = 4.0 * lam[:, j]
        dl[:, nb + e, j] = 4.0 * lam[:, i]
    return vals, dl


def reference_pressure_basis(lam: np.ndarray) -> np.ndarray:
    return np.asarray(lam, dtype=float).copy()


def barycentric_gradients(mesh: SimplicialMesh) -> np.ndarray:
    """Gradients of the barycentric coordinates, shape ``(nc, dim + 1, dim)``."""
    inv = np.linalg.inv(mesh.jacobians)  # rows are grad lambda_1..lambda_d
    g0 = -inv.sum(axis=1, keepdims=True)
    return np.concatenate([g0, inv], axis=1)


@dataclass(frozen=True, eq=False)
class BasisTable:
    """Basis values and physical gradients at the quadrature points of every cell."""

    rule: QuadratureRule
    points: np.ndarray  # (nc, nq, dim)
    weights: np.ndarray  # (nc, nq), sum over a cell = cell volume
    v_values: np.ndarray  # (nq, nloc)
    v_grads: np.ndarray  # (nc, nq, nloc, dim)
    p_values: np.ndarray  # (nq, dim + 1)
    p_grads: np.ndarray  # (nc, dim + 1, dim)


def tabulate(space: MixedSpace, rule: QuadratureRule) -> BasisTable:
    mesh = space.mesh
    if rule.dim != mesh.dim:
        raise ValueError("quadrature rule and mesh dimension differ")
    vols = mesh.volumes
    if np.any(vols <= 1e-300):
        raise ValueError("degenerate cell")
    lam = rule.points
    X = mesh.cell_coordinates()
    points = np.einsum("qi,kid->kqd", lam, X)
    weights = rule.weights[None, :] * vols[:, None]
    glam = barycentric_gradients(mesh)
    vals, dl = reference_velocity_basis(space.kind, mesh.dim, lam)
    v_grads = np.einsum("qai,kid->kqad", dl, glam)
    return BasisTable(rule, points, weights, vals, v_grads, reference_pressure_basis(lam), glam)


def interpolate_velocity(space: MixedSpace, g) -> np.ndarray:
    """Nodal interpolant of a vector field ``g(x) -> (..., dim)``.

    Vertex (and edge-midpoint) values are taken directly; a MINI bubble
    coefficient is chosen so that the interpolant also matches ``g`` at the
    cell barycentre.
    """
    d = space.dim
    coords = space.node_coords
    vals = np.asarray(g(coords), dtype=float).reshape(len(coords), d)
    if space.kind == "mini":
        nv = space.mesh.n_vertices
        vals = vals.copy()
        vals[nv:] -= vals[space.mesh.cells].mean(axis=1)
    return vals.T.reshape(-1)


def interpolate_pressure(space: MixedSpace, q) -> np.ndarray:
    return np.asarray(q(space.mesh.vertices), dtype=float).reshape(-1)


def apply_dirichlet(space: MixedSpace, g=None):
    """Strong Dirichlet data by nodal interpolation on boundary nodes.

    Returns ``(fixed_dofs, fixed_values, free_dofs)`` over the velocity block.
    ``g=None`` means homogeneous data; bubbles are never fixed.
    """
    fixed = space.boundary_velocity_dofs
    if g is None:
        values = np.zeros(len(fixed))
    else:
        pts = space.node_coords[space.boundary_nodes]
        gv = np.asarray(g(pts), dtype=float).reshape(len(pts), space.dim)
        if not np.all(np.isfinite(gv)):
            raise ValueError("Dirichlet data is not finite at a boundary node")
        values = gv.T.reshape(-1)
    free = np.setdiff1d(np.arange(space.n_velocity), fixed)
    return fixed, values, free
