"""Extra stress tensor with (p, delta)-structure and the associated F-mapping.

Tensors are numpy arrays whose last two axes are ``d x d``; any leading axes
(cells, quadrature points, samples) are broadcast.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .orlicz import NFunctionParams

__all__ = ["StressLaw", "sym", "frobenius", "stress", "stress_tangent", "stress_tangent_tensor", "f_map"]

# below this modulus the rank-one part of the tangent is dropped
_MODULUS_GUARD = 1e-300


@dataclass(frozen=True)
class StressLaw:
    """S(A) = mu0 (delta + |A^sym|)^(p-2) A^sym."""

    params: NFunctionParams
    mu0: float = 0.5

    def __post_init__(self):
        if not self.mu0 > 0:
            raise ValueError("mu0 must be positive")

    @classmethod
    def from_values(cls, p: float, delta: float = 1.0e-5, mu0: float = 0.5) -> "StressLaw":
        return cls(NFunctionParams(p, delta), mu0)

    @property
    def p(self) -> float:
        return self.params.p

    @property
    def delta(self) -> float:
        return self.params.delta

    def with_p(self, p: float) -> "StressLaw":
        return StressLaw(NFunctionParams(p, self.params.delta), self.mu0)


def sym(A):
    A = np.asarray(A, dtype=float)
    return 0.5 * (A + np.swapaxes(A, -1, -2))


def frobenius(A):
    A = np.asarray(A, dtype=float)
    return np.sqrt(np.sum(A * A, axis=(-2, -1)))


def stress(law: StressLaw, A):
    As = sym(A)
    m = frobenius(As)
    return law.mu0 * ((law.delta + m) ** (law.p - 2.0))[..., None, None] * As


def _tangent_coefficients(law, As):
    m = frobenius(As)
    p, delta = law.p, law.delta
    s = (delta + m) ** (p - 2.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(m > _MODULUS_GUARD, (p - 2.0) * (delta + m) ** (p - 3.0) / m, 0.0)
    return s, t


def stress_tangent(law: StressLaw, A, B):
    """Directional derivative DS(A)[B]."""
    As, Bs = sym(A), sym(B)
    s, t = _tangent_coefficients(law, As)
    contraction = np.sum(As * Bs, axis=(-2, -1))
    return law.mu0 * (s[..., None, None] * Bs + (t * contraction)[..., None, None] * As)


def stress_tangent_tensor(law: StressLaw, A):
    """Fourth-order tangent C with DS(A)[B]_ij = sum_kl C_ijkl B_kl."""
    As = sym(A)
    d = As.shape[-1]
    s, t = _tangent_coefficients(law, As)
    eye = np.eye(d)
    ident = 0.5 * (np.einsum("ik,jl->ijkl", eye, eye) + np.einsum("il,jk->ijkl", eye, eye))
    C = s[..., None, None, None, None] * ident + t[..., None, None, None, None] * np.einsum(
        "...ij,...kl->...ijkl", As, As
    )
    return law.mu0 * C


def f_map(params: NFunctionParams, A):
    """F(A) = (delta + |A^sym|)^((p-2)/2) A^sym."""
    As = sym(A)
    m = frobenius(As)
    return ((params.delta + m) ** (0.5 * (params.p - 2.0)))[..., None, None] * As
