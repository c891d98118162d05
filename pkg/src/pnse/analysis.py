"""Error quantities, experimental orders of convergence and the A2 diagnostic.

All errors are evaluated with the exact solution at quadrature points,
never with an interpolant of it.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .assembly import Assembler, SystemState
from .constitutive import StressLaw, f_map, frobenius, sym
from .fespace import MixedSpace, tabulate
from .manufactured import ExactSolution, BubbleSolution3D, ball_center, ball_radius, truncation_level
from .mesh import SimplicialMesh
from .orlicz import conjugate_shifted
from .quadrature import QuadratureRule, rule_for_dim

__all__ = [
    "LevelErrors",
    "error_F",
    "error_q_norm",
    "error_q_modular",
    "compute_errors",
    "eoc",
    "muckenhoupt_E",
    "a2_average",
    "theory_rate",
]


@dataclass
class LevelErrors:
    level: int
    h: float
    e_F: float
    e_q_norm: float
    e_q_modular: float

    def to_dict(self) -> dict:
        return asdict(self)


def _fields(state, exact, space, rule, law=None):
    rule = rule or rule_for_dim(space.dim)
    table = tabulate(space, rule)
    asm = Assembler(space, law or StressLaw.from_values(2.0), table)
    s = state if isinstance(state, SystemState) else SystemState.from_vector(space, state)
    return asm, table, s


def error_F(state, exact: ExactSolution, space: MixedSpace, rule: QuadratureRule | None = None, law: StressLaw | None = None) -> float:
    """||F(Dv_h) - F(Dv)||_2."""
    law = law or StressLaw.from_values(2.0)
    asm, table, s = _fields(state, exact, space, rule, law)
    Gh = asm.grad_at_qp(s.v)
    G = exact.grad_velocity(table.points)
    diff = f_map(law.params, Gh) - f_map(law.params, G)
    return math.sqrt(float(np.sum(table.weights * np.sum(diff * diff, axis=(-2, -1)))))


def _pressure_diff(asm, table, s, exact):
    return np.abs(asm.pressure_at_qp(s.q) - exact.pressure(table.points))


def error_q_norm(state, exact: ExactSolution, space: MixedSpace, rule: QuadratureRule | None = None, law: StressLaw | None = None) -> float:
    """||q_h - q||_{p'}."""
    law = law or StressLaw.from_values(2.0)
    asm, table, s = _fields(state, exact, space, rule, law)
    e = _pressure_diff(asm, table, s, exact)
    pc = law.params.p_conj
    return float(np.sum(table.weights * e**pc)) ** (1.0 / pc)


def error_q_modular(state, exact: ExactSolution, space: MixedSpace, rule: QuadratureRule | None = None, law: StressLaw | None = None) -> float:
    """Square root of the shifted conjugate modular of ``q_h - q``.

    The shift at each quadrature point is the exact strain modulus ``|Dv|``.
    """
    law = law or StressLaw.from_values(2.0)
    asm, table, s = _fields(state, exact, space, rule, law)
    e = _pressure_diff(asm, table, s, exact)
    a = frobenius(sym(exact.grad_velocity(table.points)))
    return math.sqrt(float(np.sum(table.weights * conjugate_shifted(law.params, a, e))))


def compute_errors(level: int, state, exact, space, law: StressLaw, rule=None) -> LevelErrors:
    """All three error quantities on one level, sharing one tabulation."""
    rule = rule or rule_for_dim(space.dim)
    asm, table, s = _fields(state, exact, space, rule, law)
    X = table.points
    G = exact.grad_velocity(X)
    Gh = asm.grad_at_qp(s.v)
    diff = f_map(law.params, Gh) - f_map(law.params, G)
    eF = math.sqrt(float(np.sum(table.weights * np.sum(diff * diff, axis=(-2, -1)))))
    e = np.abs(asm.pressure_at_qp(s.q) - exact.pressure(X))
    pc = law.params.p_conj
    en = float(np.sum(table.weights * e**pc)) ** (1.0 / pc)
    a = frobenius(sym(G))
    em = math.sqrt(float(np.sum(table.weights * conjugate_shifted(law.params, a, e))))
    return LevelErrors(level, space.mesh.h, eF, en, em)


def eoc(errors, field: str | None = None, h=None) -> list:
    """Experimental orders log(e_i / e_{i-1}) / log(h_i / h_{i-1}).

    ``errors`` is either a sequence of :class:`LevelErrors` (with ``field``
    naming the attribute) or of plain numbers (with ``h`` given). The result
    has one entry per level; the first entry and any entry next to a
    non-positive error is ``None``.
    """
    if field is not None:
        vals = [getattr(e, field) for e in errors]
        hs = [e.h for e in errors]
    else:
        vals = list(errors)
        if h is None:
            raise ValueError("mesh sizes are required for plain error lists")
        hs = list(h)
    if len(vals) != len(hs):
        raise ValueError("errors and mesh sizes differ in length")
    out = [None]
    for i in range(1, len(vals)):
        e0, e1 = vals[i - 1], vals[i]
        if e0 is None or e1 is None or not (e0 > 0 and e1 > 0 and math.isfinite(e0) and math.isfinite(e1)):
            out.append(None)
            continue
        out.append(math.log(e1 / e0) / math.log(hs[i] / hs[i - 1]))
    return out


def theory_rate(p: float, case: int) -> float:
    """Predicted modular pressure rate: p'/2 in Case 1, 1 in Case 2."""
    return 0.5 * p / (p - 1.0) if case == 1 else 1.0


def _ball_points(mesh, rule, c, r):
    X = mesh.cell_coordinates()
    # only cells whose bounding box meets the ball can hold points inside it
    near = np.all(X.min(axis=1) <= c + r, axis=1) & np.all(X.max(axis=1) >= c - r, axis=1)
    pts = np.einsum("qi,kid->kqd", rule.points, X[near])
    wts = rule.weights[None, :] * mesh.volumes[near][:, None]
    inside = np.linalg.norm(pts - c, axis=-1) < r
    return pts[inside], wts[inside]


def _weight(exact, law, P):
    mod = frobenius(sym(exact.grad_velocity(P)))
    return (law.delta + mod) ** (law.p - 2.0)


def muckenhoupt_E(mesh: SimplicialMesh, exact: BubbleSolution3D, law: StressLaw, rule: QuadratureRule | None = None, ball: int | None = None):
    """Discrete A2 product on the ball ``B_{r^N}(m^N)`` with ``N`` the truncation level.

    Returns ``(E, n_points)``; ``E`` is ``None`` when the ball contains no
    quadrature point.
    """
    rule = rule or rule_for_dim(mesh.dim)
    k = truncation_level(mesh.level) if ball is None else ball
    c, r = ball_center(k), ball_radius(k)
    P, W = _ball_points(mesh, rule, c, r)
    if len(W) == 0:
        return None, 0
    mu = _weight(exact, law, P)
    return float(np.sum(W * mu) * np.sum(W / mu)), len(W)


def a2_average(mesh: SimplicialMesh, exact: ExactSolution, law: StressLaw, center, radius: float, rule: QuadratureRule | None = None):
    """Normalized discrete A2 quotient over a ball.

    Returns ``(<mu>_B <mu^-1>_B, n_points)`` where the averages use the
    quadrature measure restricted to the ball and divided by its total
    weight, so the value is at least one. ``None`` when the ball holds no
    quadrature point.
    """
    rule = rule or rule_for_dim(mesh.dim)
    P, W = _ball_points(mesh, rule, np.asarray(center, dtype=float), radius)
    if len(W) == 0:
        return None, 0
    mu = _weight(exact, law, P)
    tot = np.sum(W)
    return float(np.sum(W * mu) * np.sum(W / mu) / tot**2), len(W)
