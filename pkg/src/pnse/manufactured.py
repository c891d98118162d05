"""Manufactured exact solutions for the convergence experiments.

2D: a singular vortex ``v = |x|^beta (x2, -x1)`` with pressure
``|x|^gamma - mean``.  3D: a truncated sum of rotating bubbles on balls that
shrink towards ``e1`` with pressure ``25 (|x|^gamma - mean)``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .mesh import initial_mesh_3d
from .quadrature import QuadratureRule, tet_rule_keast7

__all__ = [
    "ExactSolution",
    "VortexSolution2D",
    "BubbleSolution3D",
    "gamma_for_case",
    "q_mean_oracle",
    "vortex_2d",
    "bubbles_3d",
    "reference_point_q0",
    "ball_radius",
    "ball_center",
    "truncation_level",
    "make_exact",
    "eval_v_2d",
    "eval_grad_v_2d",
    "eval_v_3d",
    "eval_grad_v_3d",
    "eval_q",
]

BETA = 0.01
GAMMA_OFFSET = 1.0e-2
PRESSURE_SCALE_3D = 25.0


def gamma_for_case(case: int, p: float, dim: int = 2, beta: float = BETA, rule: str = "dimensional") -> float:
    """Pressure exponent gamma of the two regularity cases.

    Case 1 places ``q`` just inside ``W^{1,p'}``; Case 2 just makes
    ``grad q`` square integrable against the inverse viscosity weight.

    ``rule="dimensional"`` uses the dimension-aware thresholds, i.e. in 3D
    ``1 - 3/p'`` (Case 1) and ``-1/2`` (Case 2, the weight is constant near
    the origin because the velocity vanishes there). ``rule="planar"`` reuses
    the two-dimensional formulas in every dimension.
    """
    if case not in (1, 2):
        raise ValueError(f"case must be 1 or 2, got {case}")
    pc = p / (p - 1.0)
    if dim == 2 or rule == "planar":
        base = 1.0 - 2.0 / pc if case == 1 else beta * (p - 2.0) / 2.0
    elif rule == "dimensional":
        base = 1.0 - dim / pc if case == 1 else 1.0 - dim / 2.0
    else:
        raise ValueError(f"unknown gamma rule {rule!r}")
    return base + GAMMA_OFFSET


# --- mean of |x|^gamma over the unit cube -------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(6)  # exact to degree 11


def _shell_integral(gamma, dim, n):
    # integral of |x|^gamma over [0,1]^d minus [0,1/2]^d, n x ... x n boxes per sub-box
    nodes = 0.5 * (_GL_X + 1.0)
    wts = 0.5 * _GL_W
    total = 0.0
    for corner in itertools.product((0, 1), repeat=dim):
        if not any(corner):
            continue
        lo = 0.5 * np.array(corner, dtype=float)
        edges = np.linspace(0.0, 0.5, n + 1)
        h = 0.5 / n
        pts1d = (edges[:-1, None] + h * nodes[None, :]).ravel()
        w1d = np.tile(h * wts, n)
        grids = np.meshgrid(*[lo[k] + pts1d for k in range(dim)], indexing="ij")
        wgrid = np.ones_like(grids[0])
        for k, wk in enumerate(np.meshgrid(*[w1d] * dim, indexing="ij")):
            wgrid = wgrid * wk
        r2 = sum(g * g for g in grids)
        total += float(np.sum(wgrid * r2 ** (0.5 * gamma)))
    return total


@lru_cache(maxsize=None)
def q_mean_oracle(gamma: float, dim: int, tol: float = 1e-11, max_refinements: int = 8) -> float:
    """Mean of ``|x|^gamma`` over ``(0, 1)^dim``.

    Uses the scaling identity ``I = S / (1 - 2^-(dim + gamma))`` where ``S`` is
    the integral over the shell ``[0,1]^d minus [0,1/2]^d`` (the integrand is
    smooth there). ``S`` is computed with a composite tensor Gauss rule of
    degree 11 that is uniformly refined until successive values agree to
    ``tol``.
    """
    if not gamma > -dim:
        raise ValueError("gamma must exceed -dim for integrability")
    if gamma == 0.0:
        return 1.0
    factor = 1.0 / (1.0 - 2.0 ** (-(dim + gamma)))
    prev = _shell_integral(gamma, dim, 1) * factor
    n = 1
    for _ in range(max_refinements):
        n *= 2
        cur = _shell_integral(gamma, dim, n) * factor
        if abs(cur - prev) < tol:
            return cur
        prev = cur
    raise RuntimeError("mean oracle did not converge")


class ExactSolution:
    """Interface shared by the manufactured solutions.

    Subclasses evaluate at arrays of points ``x`` of shape ``(..., dim)``.
    """

    dim: int

    def velocity(self, x):
        raise NotImplementedError

    def grad_velocity(self, x):
        """``G[..., i, j] = d v_i / d x_j``."""
        raise NotImplementedError

    def pressure(self, x):
        raise NotImplementedError


@dataclass(frozen=True)
class VortexSolution2D(ExactSolution):
    beta: float
    gamma: float
    case: int | None = None
    q_mean: float = field(default=None)

    dim = 2

    def __post_init__(self):
        if self.q_mean is None:
            object.__setattr__(self, "q_mean", q_mean_oracle(self.gamma, 2))

    def velocity(self, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(r > 0, r**self.beta, 0.0 if self.beta > 0 else 1.0)
        return scale[..., None] * np.stack([x[..., 1], -x[..., 0]], axis=-1)

    def grad_velocity(self, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        if np.any(r == 0):
            raise ValueError("velocity gradient requested at the origin")
        rot = np.array([[0.0, 1.0], [-1.0, 0.0]])
        jx = np.stack([x[..., 1], -x[..., 0]], axis=-1)
        G = (r**self.beta)[..., None, None] * rot
        G = G + (self.beta * r ** (self.beta - 2.0))[..., None, None] * jx[..., :, None] * x[..., None, :]
        return G

    def pressure(self, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        return r**self.gamma - self.q_mean


def vortex_2d(p: float, case: int, beta: float = BETA) -> VortexSolution2D:
    return VortexSolution2D(beta, gamma_for_case(case, p, 2, beta), case)


# --- 3D bubble sum --------------------------------------------------------

E1 = np.array([1.0, 0.0, 0.0])


def ball_radius(k: int) -> float:
    return 2.0 ** (-k - 2)


@lru_cache(maxsize=None)
def reference_point_q0(rule: QuadratureRule | None = None) -> tuple:
    """Quadrature point of the initial Kuhn mesh closest to ``e1``.

    Restricted to ``K0 = conv{0, e1, e1+e2, e1+e2+e3}``; an adjacent cell has
    a mirror point at the same distance, so ``K0`` alone fixes the choice.
    Ties inside ``K0`` are broken lexicographically.
    """
    rule = rule or tet_rule_keast7()
    K0 = np.array([[0.0, 0, 0], [1, 0, 0], [1, 1, 0], [1, 1, 1]])
    pts = rule.points @ K0
    dist = np.linalg.norm(pts - E1, axis=1)
    best = np.flatnonzero(np.isclose(dist, dist.min(), rtol=0, atol=1e-14))
    chosen = min(best, key=lambda i: tuple(pts[i]))
    return tuple(pts[chosen])


def _unit_direction():
    q0 = np.array(reference_point_q0())
    u = q0 - E1
    return u / np.linalg.norm(u)


def ball_center(k: int) -> np.ndarray:
    return E1 + 3.0 * ball_radius(k) * _unit_direction()


def closest_point_to_e1(level: int, rule: QuadratureRule | None = None) -> np.ndarray:
    """Level-``level`` quadrature point closest to ``e1``.

    Cells touching ``e1`` are homothetic copies (ratio ``2^-level``) of the
    initial cells, so the point is ``e1 + 2^-level (q0 - e1)``.
    """
    q0 = np.array(reference_point_q0(rule))
    return E1 + 2.0 ** (-level) * (q0 - E1)


def truncation_level(mesh_level: int, rule: QuadratureRule | None = None, kmax: int = 60) -> int:
    """Index of the ball containing the level's quadrature point closest to e1."""
    qi = closest_point_to_e1(mesh_level, rule)
    for k in range(1, kmax + 1):
        if np.linalg.norm(qi - ball_center(k)) <= ball_radius(k) * (1 + 1e-12):
            return k
    raise RuntimeError(f"no ball contains the level-{mesh_level} reference point")


@dataclass(frozen=True)
class BubbleSolution3D(ExactSolution):
    """Velocity ``sum_{k<=N} v^k`` of rotating bubbles, pressure ``25 (|x|^gamma - mean)``."""

    gamma: float
    n_bubbles: int
    case: int | None = None
    q_mean: float = field(default=None)
    pressure_scale: float = PRESSURE_SCALE_3D

    dim = 3

    def __post_init__(self):
        if self.q_mean is None:
            object.__setattr__(self, "q_mean", q_mean_oracle(self.gamma, 3))

    @property
    def radii(self) -> np.ndarray:
        return np.array([ball_radius(k) for k in range(1, self.n_bubbles + 1)])

    @property
    def centers(self) -> np.ndarray:
        return np.array([ball_center(k) for k in range(1, self.n_bubbles + 1)]).reshape(-1, 3)

    def _active(self, x):
        # index (1-based) of the ball containing each point, 0 if none
        x = np.asarray(x, dtype=float)
        idx = np.zeros(x.shape[:-1], dtype=int)
        for k in range(1, self.n_bubbles + 1):
            inside = np.linalg.norm(x - ball_center(k), axis=-1) < ball_radius(k)
            idx[inside] = k
        return idx

    def velocity(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        idx = self._active(x)
        for k in np.unique(idx[idx > 0]):
            sel = idx == k
            y = x[sel] - ball_center(k)
            r = ball_radius(k)
            rho = np.linalg.norm(y, axis=-1)
            g = (k / r) * (0.5 * r - 0.5 * rho)
            out[sel] = g[:, None] * np.stack([y[:, 1], -y[:, 0], np.zeros(len(y))], axis=-1)
        return out

    def grad_velocity(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape + (3,))
        idx = self._active(x)
        rot = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
        for k in np.unique(idx[idx > 0]):
            sel = idx == k
            y = x[sel] - ball_center(k)
            r = ball_radius(k)
            rho = np.linalg.norm(y, axis=-1)
            g = (k / r) * (0.5 * r - 0.5 * rho)
            dg = -0.5 * k / r
            jy = np.stack([y[:, 1], -y[:, 0], np.zeros(len(y))], axis=-1)
            with np.errstate(divide="ignore", invalid="ignore"):
                radial = np.where(rho[:, None] > 0, y / rho[:, None], 0.0)
            out[sel] = g[:, None, None] * rot + dg * jy[:, :, None] * radial[:, None, :]
        return out

    def pressure(self, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        with np.errstate(divide="ignore"):
            return self.pressure_scale * (r**self.gamma - self.q_mean)


def bubbles_3d(p: float, case: int, n_bubbles: int, gamma_rule: str = "dimensional") -> BubbleSolution3D:
    return BubbleSolution3D(gamma_for_case(case, p, 3, rule=gamma_rule), n_bubbles, case)


def _check_dim(sol, dim):
    if sol.dim != dim:
        raise ValueError(f"expected a {dim}D solution, got {sol.dim}D")


def eval_v_2d(sol: VortexSolution2D, x):
    _check_dim(sol, 2)
    return sol.velocity(x)


def eval_grad_v_2d(sol: VortexSolution2D, x):
    _check_dim(sol, 2)
    return sol.grad_velocity(x)


def eval_v_3d(sol: BubbleSolution3D, x):
    _check_dim(sol, 3)
    return sol.velocity(x)


def eval_grad_v_3d(sol: BubbleSolution3D, x):
    _check_dim(sol, 3)
    return sol.grad_velocity(x)


def eval_q(sol: ExactSolution, x):
    """Pressure of either manufactured solution (zero mean over the unit cube)."""
    return sol.pressure(x)


def make_exact(dim: int, p: float, case: int, level: int = 0, gamma_rule: str = "dimensional") -> ExactSolution:
    """Exact solution used on refinement level ``level``."""
    if dim == 2:
        return vortex_2d(p, case)
    return bubbles_3d(p, case, truncation_level(level), gamma_rule)
