"""Symmetric quadrature rules of degree 6 on triangles and tetrahedra.

Points are stored in barycentric coordinates and weights are normalized so
that they sum to one; multiply by the simplex volume to integrate.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = ["QuadratureRule", "triangle_rule_deg6", "tet_rule_keast7", "rule_for_dim", "quad_points_physical"]


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    dim: int
    points: np.ndarray  # (nq, dim + 1) barycentric
    weights: np.ndarray  # (nq,), sum to 1
    degree: int

    def __post_init__(self):
        pts = np.asarray(self.points)
        w = np.asarray(self.weights)
        if self.dim not in (2, 3) or pts.shape != (len(w), self.dim + 1):
            raise ValueError("points must be barycentric coordinates of shape (nq, dim + 1)")
        if abs(w.sum() - 1.0) > 1e-14:
            raise ValueError("weights must sum to one")
        if np.any(pts <= 0.0) or np.any(np.abs(pts.sum(axis=1) - 1.0) > 1e-14):
            raise ValueError("points must lie strictly inside the simplex")

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def reference_points(self) -> np.ndarray:
        """Cartesian points on the reference simplex conv{0, e_1, ..., e_d}."""
        return self.points[:, 1:]

    @property
    def reference_volume(self) -> float:
        return 1.0 / (2.0 if self.dim == 2 else 6.0)


def _orbit(coords):
    return sorted(set(itertools.permutations(coords)))


def _build(dim, orbits, degree):
    pts, wts = [], []
    for w, coords in orbits:
        for pt in _orbit(coords):
            pts.append(pt)
            wts.append(w)
    pts = np.array(pts, dtype=float)
    wts = np.array(wts, dtype=float)
    pts.setflags(write=False)
    wts.setflags(write=False)
    return QuadratureRule(dim, pts, wts, degree)


@lru_cache(maxsize=None)
def triangle_rule_deg6() -> QuadratureRule:
    """12-point Strang-Fix rule, exact for polynomials of degree 6."""
    a1, a2 = 0.24928674517091042129, 0.063089014491502228340
    b1, b2 = 0.053145049844816947353, 0.31035245103378440542
    orbits = [
        (0.11678627572637936603, (a1, a1, 1.0 - 2.0 * a1)),
        (0.050844906370206816921, (a2, a2, 1.0 - 2.0 * a2)),
        (0.082851075618373575194, (b1, b2, 1.0 - b1 - b2)),
    ]
    return _build(2, orbits, 6)


@lru_cache(maxsize=None)
def tet_rule_keast7() -> QuadratureRule:
    """24-point Keast rule with positive weights, exact for degree 6."""
    a1, a2, a3 = 0.21460287125915202929, 0.040673958534611353116, 0.32233789014227551034
    b1, b2 = 0.063661001875017525299, 0.26967233145831580803
    orbits = [
        (0.039922750258167492100, (a1, a1, a1, 1.0 - 3.0 * a1)),
        (0.010077211055320642948, (a2, a2, a2, 1.0 - 3.0 * a2)),
        (0.055357181543654722095, (a3, a3, a3, 1.0 - 3.0 * a3)),
        (27.0 / 560.0, (b1, b1, b2, 1.0 - 2.0 * b1 - b2)),
    ]
    return _build(3, orbits, 6)


def rule_for_dim(dim: int) -> QuadratureRule:
    if dim == 2:
        return triangle_rule_deg6()
    if dim == 3:
        return tet_rule_keast7()
    raise ValueError(f"unsupported dimension {dim}")


def quad_points_physical(rule: QuadratureRule, cell):
    """Map the rule onto a simplex given by its ``(dim + 1, dim)`` vertex array.

    Returns physical points ``(nq, dim)`` and weights scaled so that they sum
    to the cell volume.
    """
    cell = np.asarray(cell, dtype=float)
    if cell.shape != (rule.dim + 1, rule.dim):
        raise ValueError(f"cell must have shape {(rule.dim + 1, rule.dim)}")
    jac = (cell[1:] - cell[0]).T
    vol = abs(np.linalg.det(jac)) * rule.reference_volume
    if vol <= 1e-300:
        raise ValueError("degenerate cell")
    return rule.points @ cell, rule.weights * vol
