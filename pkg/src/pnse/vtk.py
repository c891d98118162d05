"""Legacy ASCII VTK output of the strain modulus on the bubble spheres."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .constitutive import frobenius, sym

__all__ = ["sphere_grid", "write_ball_surfaces"]


def sphere_grid(center, radius: float, n_theta: int = 16, n_phi: int = 32):
    """Latitude/longitude quad mesh of a sphere; returns ``(points, quads)``."""
    theta = np.linspace(0.0, np.pi, n_theta + 1)
    phi = np.linspace(0.0, 2.0 * np.pi, n_phi, endpoint=False)
    T, P = np.meshgrid(theta, phi, indexing="ij")
    pts = np.stack([np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)], axis=-1).reshape(-1, 3)
    pts = np.asarray(center) + radius * pts
    i, j = np.meshgrid(np.arange(n_theta), np.arange(n_phi), indexing="ij")
    a = i * n_phi + j
    b = i * n_phi + (j + 1) % n_phi
    quads = np.stack([a, b, b + n_phi, a + n_phi], axis=-1).reshape(-1, 4)
    return pts, quads


def write_ball_surfaces(path, exact, shrink: float = 0.999, n_theta: int = 16, n_phi: int = 32) -> Path:
    """Write ``|sym grad v|`` sampled just inside every bubble sphere of ``exact``."""
    pts_all, quads_all, offset = [], [], 0
    for c, r in zip(exact.centers, exact.radii):
        pts, quads = sphere_grid(c, shrink * r, n_theta, n_phi)
        pts_all.append(pts)
        quads_all.append(quads + offset)
        offset += len(pts)
    path = Path(path)
    if not pts_all:
        raise ValueError("the exact solution has no bubbles")
    pts = np.concatenate(pts_all)
    quads = np.concatenate(quads_all)
    vals = frobenius(sym(exact.grad_velocity(pts)))
    lines = ["# vtk DataFile Version 3.0", "strain modulus on bubble spheres", "ASCII", "DATASET POLYDATA",
             f"POINTS {len(pts)} double"]
    lines += [f"{x:.10g} {y:.10g} {z:.10g}" for x, y, z in pts]
    lines.append(f"POLYGONS {len(quads)} {5 * len(quads)}")
    lines += ["4 " + " ".join(map(str, q)) for q in quads]
    lines += [f"POINT_DATA {len(pts)}", "SCALARS strain_modulus double 1", "LOOKUP_TABLE default"]
    lines += [f"{v:.10g}" for v in vals]
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    return path
