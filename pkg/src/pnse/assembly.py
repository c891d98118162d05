"""Residual and Jacobian of the discrete p-Navier-Stokes saddle-point system.

Unknowns are ordered ``[velocity | pressure | multiplier]``. For test
functions ``z`` (velocity) and ``y`` (pressure) the residual reads::

    R_z = (S(Dv), Dz) + b(v, v, z) - (q, div z) - l(z)
    R_y = (div v, y) + lam (1, y)
    R_lam = (q, 1)

where ``b(u, w, z) = 1/2 ([grad w] u, z) - 1/2 ([grad z] u, w)`` is Temam's
skew-symmetric convective form and ``l`` the load functional. Rows of
Dirichlet velocity dofs are zero in the residual and identity rows/columns
in the Jacobian.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .constitutive import StressLaw, stress, sym, frobenius
from .fespace import BasisTable, MixedSpace, tabulate
from .manufactured import ExactSolution
from .quadrature import rule_for_dim

__all__ = [
    "SystemState",
    "Assembler",
    "temam_form",
    "residual",
    "jacobian",
    "rhs_weak_form",
    "rhs_strong_form",
]


@dataclass
class SystemState:
    v: np.ndarray
    q: np.ndarray
    lam: float = 0.0

    @classmethod
    def zeros(cls, space: MixedSpace) -> "SystemState":
        return cls(np.zeros(space.n_velocity), np.zeros(space.n_pressure), 0.0)

    @classmethod
    def from_vector(cls, space: MixedSpace, x: np.ndarray) -> "SystemState":
        if len(x) != space.n_total:
            raise ValueError(f"state vector has length {len(x)}, expected {space.n_total}")
        return cls(x[: space.n_velocity].copy(), x[space.pressure_slice].copy(), float(x[-1]))

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.v, self.q, [self.lam]])


def _as_vector(space, state):
    x = state.to_vector() if isinstance(state, SystemState) else np.asarray(state, dtype=float)
    if x.shape != (space.n_total,):
        raise ValueError(f"state has shape {x.shape}, expected ({space.n_total},)")
    return x


class Assembler:
    """Vectorized element loop for one space, stress law and quadrature rule.

    Local contributions of all cells are computed at once with numpy and
    summed into the global system in a fixed order, so repeated calls are
    bitwise reproducible.
    """

    def __init__(self, space: MixedSpace, law: StressLaw, table: BasisTable | None = None, convection: bool = True):
        self.space = space
        self.law = law
        self.table = table if table is not None else tabulate(space, rule_for_dim(space.dim))
        self.convection = convection
        self._dirichlet = space.boundary_velocity_dofs
        self._build_pattern()

    @property
    def border(self):
        """Pressure slice and multiplier index of the zero-mean constraint."""
        return (self.space.pressure_slice, self.space.multiplier_index)

    def with_law(self, law: StressLaw) -> "Assembler":
        other = object.__new__(Assembler)
        other.__dict__.update(self.__dict__)
        other.law = law
        return other

    # -- patterns ----------------------------------------------------------
    def _build_pattern(self):
        s = self.space
        nc, nloc, d = s.cell_velocity_dofs.shape
        vd = s.cell_velocity_dofs.reshape(nc, nloc * d)
        pd = s.cell_pressure_dofs
        npl = pd.shape[1]
        mult = s.multiplier_index
        self._rows_vv = np.repeat(vd, nloc * d, axis=1).ravel()
        self._cols_vv = np.tile(vd, (1, nloc * d)).ravel()
        self._rows_vp = np.repeat(vd, npl, axis=1).ravel()
        self._cols_vp = np.tile(pd, (1, nloc * d)).ravel()
        self._rows_pm = pd.ravel()
        self._cols_pm = np.full(pd.size, mult)
        mask = np.ones(s.n_total)
        mask[self._dirichlet] = 0.0
        self._keep = sp.diags(mask)
        ident = np.zeros(s.n_total)
        ident[self._dirichlet] = 1.0
        self._ident = sp.diags(ident)

    # -- field evaluation --------------------------------------------------
    def local_velocity(self, v):
        s = self.space
        V = np.asarray(v).reshape(s.dim, s.n_scalar)
        return np.transpose(V[:, s.cell_nodes], (1, 2, 0))  # (nc, nloc, d)

    def velocity_at_qp(self, v):
        loc = self.local_velocity(v)
        return np.einsum("qa,kac->kqc", self.table.v_values, loc)

    def grad_at_qp(self, v):
        loc = self.local_velocity(v)
        return np.einsum("kqaj,kac->kqcj", self.table.v_grads, loc)

    def pressure_at_qp(self, q):
        qloc = np.asarray(q)[self.space.mesh.cells]
        return np.einsum("qb,kb->kq", self.table.p_values, qloc)

    # -- forms ---------------------------------------------------------------
    def temam(self, u, w, z) -> float:
        """b(u, w, z) evaluated by quadrature."""
        t = self.table
        U, W, Z = (self.velocity_at_qp(f) for f in (u, w, z))
        gW, gZ = self.grad_at_qp(w), self.grad_at_qp(z)
        conv_w = np.einsum("kqcj,kqj->kqc", gW, U)
        conv_z = np.einsum("kqcj,kqj->kqc", gZ, U)
        integrand = 0.5 * np.sum(conv_w * Z, axis=-1) - 0.5 * np.sum(conv_z * W, axis=-1)
        return float(np.sum(t.weights * integrand))

    def _scatter(self, local_v, local_p, mult):
        s = self.space
        out = np.bincount(s.cell_velocity_dofs.ravel(), local_v.ravel(), minlength=s.n_total)
        out += np.bincount(s.cell_pressure_dofs.ravel(), local_p.ravel(), minlength=s.n_total)
        out[-1] += mult
        return out

    def residual(self, state, load: np.ndarray | None = None) -> np.ndarray:
        s, t = self.space, self.table
        x = _as_vector(s, state)
        v, q, lam = x[: s.n_velocity], x[s.pressure_slice], x[-1]
        d = s.dim
        V = self.velocity_at_qp(v)
        G = self.grad_at_qp(v)
        Q = self.pressure_at_qp(q)
        flux = stress(self.law, G) - Q[..., None, None] * np.eye(d)
        if self.convection:
            flux = flux - 0.5 * V[..., :, None] * V[..., None, :]
            src = 0.5 * np.einsum("kqcj,kqj->kqc", G, V)
            r_v = np.einsum("kq,kqcj,kqaj->kac", t.weights, flux, t.v_grads)
            r_v += np.einsum("kq,kqc,qa->kac", t.weights, src, t.v_values)
        else:
            r_v = np.einsum("kq,kqcj,kqaj->kac", t.weights, flux, t.v_grads)
        div = np.trace(G, axis1=-2, axis2=-1)
        r_p = np.einsum("kq,kq,qb->kb", t.weights, div + lam, t.p_values)
        r_m = float(np.sum(t.weights * Q))
        R = self._scatter(r_v, r_p, r_m)
        if load is not None:
            load = np.asarray(load, dtype=float)
            if load.shape != (s.n_total,):
                raise ValueError(f"load has shape {load.shape}, expected ({s.n_total},)")
            R[: s.n_velocity] -= load[: s.n_velocity]
        R[self._dirichlet] = 0.0
        return R

    def jacobian(self, state) -> sp.csr_matrix:
        s, t = self.space, self.table
        x = _as_vector(s, state)
        v = x[: s.n_velocity]
        law = self.law
        d = s.dim
        nc, nloc = s.cell_nodes.shape
        W = t.weights
        N = t.v_values
        dN = t.v_grads
        G = self.grad_at_qp(v)
        As = sym(G)
        m = frobenius(As)
        coef_s = law.mu0 * (law.delta + m) ** (law.p - 2.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            coef_t = np.where(m > 1e-300, law.mu0 * (law.p - 2.0) * (law.delta + m) ** (law.p - 3.0) / m, 0.0)
        eye = np.eye(d)
        # viscous part: s/2 (delta_ce grad a . grad b + d_e phi_a d_c phi_b) + t (A grad a)_c (A grad b)_e
        ws = W * coef_s
        K = 0.5 * np.einsum("kq,kqaj,kqbj,ce->kacbe", ws, dN, dN, eye, optimize=True)
        K += 0.5 * np.einsum("kq,kqae,kqbc->kacbe", ws, dN, dN, optimize=True)
        H = np.einsum("kqcj,kqaj->kqac", As, dN)
        K += np.einsum("kq,kqac,kqbe->kacbe", W * coef_t, H, H, optimize=True)
        if self.convection:
            V = self.velocity_at_qp(v)
            vg = np.einsum("kqj,kqaj->kqa", V, dN)  # v . grad phi_a
            K += -0.5 * np.einsum("kq,qb,kqa,ce->kacbe", W, N, vg, eye, optimize=True)
            K += -0.5 * np.einsum("kq,qb,kqc,kqae->kacbe", W, N, V, dN, optimize=True)
            K += 0.5 * np.einsum("kq,qa,kqb,ce->kacbe", W, N, vg, eye, optimize=True)
            K += 0.5 * np.einsum("kq,qa,qb,kqce->kacbe", W, N, N, G, optimize=True)
        # pressure coupling B[(a,c), b] = (phi_b^p, d_c phi_a)
        B = np.einsum("kq,qb,kqac->kacb", W, t.p_values, dN)
        M = np.einsum("kq,qb->kb", W, t.p_values)
        nv = nloc * d
        npl = d + 1
        Kf = K.reshape(nc, nv, nv)
        Bf = B.reshape(nc, nv, npl)
        rows = np.concatenate([self._rows_vv, self._rows_vp, self._cols_vp, self._rows_pm, self._cols_pm])
        cols = np.concatenate([self._cols_vv, self._cols_vp, self._rows_vp, self._cols_pm, self._rows_pm])
        vals = np.concatenate([Kf.ravel(), -Bf.ravel(), Bf.ravel(), M.ravel(), M.ravel()])
        J = sp.csr_matrix((vals, (rows, cols)), shape=(s.n_total, s.n_total))
        return (self._keep @ J @ self._keep + self._ident).tocsr()

    # -- loads -------------------------------------------------------------
    def load_weak(self, exact: ExactSolution) -> np.ndarray:
        """Load ``l(z) = (S(Dv), Dz) + ([grad v] v, z) - (q, div z)`` from exact fields."""
        s, t = self.space, self.table
        X = t.points
        G = exact.grad_velocity(X)
        q = exact.pressure(X)
        flux = stress(self.law, G) - q[..., None, None] * np.eye(s.dim)
        r_v = np.einsum("kq,kqcj,kqaj->kac", t.weights, flux, t.v_grads)
        if self.convection:
            V = exact.velocity(X)
            conv = np.einsum("kqcj,kqj->kqc", G, V)
            r_v += np.einsum("kq,kqc,qa->kac", t.weights, conv, t.v_values)
        return np.bincount(s.cell_velocity_dofs.ravel(), r_v.ravel(), minlength=s.n_total)

    def load_strong(self, f) -> np.ndarray:
        """Load ``l(z) = (f, z)`` for a body force ``f(x) -> (..., d)``."""
        s, t = self.space, self.table
        F = np.asarray(f(t.points), dtype=float)
        r_v = np.einsum("kq,kqc,qa->kac", t.weights, F, t.v_values)
        return np.bincount(s.cell_velocity_dofs.ravel(), r_v.ravel(), minlength=s.n_total)


def temam_form(space: MixedSpace, u, w, z, table: BasisTable | None = None) -> float:
    from .constitutive import StressLaw as _SL  # law is irrelevant for b

    return Assembler(space, _SL.from_values(2.0), table).temam(u, w, z)


def residual(space, law, state, rhs_data=None, table=None, convection=True) -> np.ndarray:
    return Assembler(space, law, table, convection).residual(state, rhs_data)


def jacobian(space, law, state, table=None, convection=True) -> sp.csr_matrix:
    return Assembler(space, law, table, convection).jacobian(state)


def rhs_weak_form(space, law, exact, table=None, convection=True) -> np.ndarray:
    return Assembler(space, law, table, convection).load_weak(exact)


def rhs_strong_form(space, law, f, table=None) -> np.ndarray:
    return Assembler(space, law, table).load_strong(f)
