"""N-functions with (p, delta)-structure and their shifted/conjugate variants.

All functions accept scalars or numpy arrays and broadcast over them.

Examples
--------
>>> from pnse.orlicz import NFunctionParams, phi_eval
>>> float(phi_eval(NFunctionParams(p=3.0, delta=0.0), 2.0))
2.6666666666666665
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "NFunctionParams",
    "phi_eval",
    "phi_prime",
    "shifted_eval",
    "shifted_prime",
    "conjugate_shifted",
    "conjugate_exact",
    "inverse_phi_prime",
]


@dataclass(frozen=True)
class NFunctionParams:
    """Exponent ``p`` and shift ``delta`` of phi with phi'(t) = (delta + t)^(p-2) t."""

    p: float
    delta: float = 0.0

    def __post_init__(self):
        if not self.p > 1.0:
            raise ValueError(f"p must lie in (1, inf), got {self.p}")
        if not self.delta >= 0.0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")

    @property
    def p_conj(self) -> float:
        """Hölder conjugate exponent p' = p / (p - 1)."""
        return self.p / (self.p - 1.0)

    def shifted(self, a: float) -> "NFunctionParams":
        """Parameters of phi_a; for this family phi_a = phi_{p, delta + a}."""
        if a < 0:
            raise ValueError(f"shift must be >= 0, got {a}")
        return NFunctionParams(self.p, self.delta + a)


def _check_nonneg(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise ValueError("argument must be nonnegative")
    return t


def _phi(p, delta, t):
    # delta, t broadcastable arrays; closed-form antiderivative of (delta+s)^(p-2) s
    delta, t = np.broadcast_arrays(np.asarray(delta, float), np.asarray(t, float))
    out = np.zeros(t.shape)
    zero = delta == 0.0
    out[zero] = t[zero] ** p / p
    nz = ~zero & (t > 0)
    if np.any(nz):
        d, tt = delta[nz], t[nz]
        L = np.log1p(tt / d)
        # expm1(pL)/p - expm1((p-1)L)/(p-1), summed as a series when L is small
        big = L >= 0.1
        huge = L > 30.0
        val = np.empty_like(L)
        mid = big & ~huge
        Lb = L[mid]
        val[mid] = np.expm1(p * Lb) / p - np.expm1((p - 1.0) * Lb) / (p - 1.0)
        # t >> delta: rearranged closed form, free of overflow in expm1
        val[huge] = 0.0
        Ls = L[~big]
        acc = np.zeros_like(Ls)
        term = np.ones_like(Ls)
        for n in range(1, 30):
            term = term * Ls / n
            if n >= 2:
                acc += term * (p ** (n - 1) - (p - 1.0) ** (n - 1))
        val[~big] = acc
        res = d**p * val
        # t >> delta: rearranged closed form, free of overflow in expm1
        dh, th = d[huge], tt[huge]
        res[huge] = ((dh + th) ** (p - 1.0) * ((p - 1.0) * th - dh) + dh**p) / (p * (p - 1.0))
        out[nz] = res
    return out


def phi_eval(params: NFunctionParams, t):
    """Evaluate phi(t) = int_0^t (delta + s)^(p-2) s ds in closed form."""
    t = _check_nonneg(t)
    out = _phi(params.p, params.delta, t)
    return out if out.ndim else float(out)


def phi_prime(params: NFunctionParams, t):
    """phi'(t) = (delta + t)^(p-2) t."""
    t = _check_nonneg(t)
    out = np.where(t > 0, (params.delta + t) ** (params.p - 2.0) * t, 0.0)
    return out if out.ndim else float(out)


def shifted_eval(params: NFunctionParams, a, t):
    """Shifted N-function phi_a(t); equals phi with delta replaced by delta + a."""
    a = _check_nonneg(a)
    t = _check_nonneg(t)
    out = _phi(params.p, params.delta + a, t)
    return out if out.ndim else float(out)


def shifted_prime(params: NFunctionParams, a, t):
    """phi_a'(t) = phi'(a + t) t / (a + t) = (delta + a + t)^(p-2) t."""
    a = _check_nonneg(a)
    t = _check_nonneg(t)
    out = np.where(t > 0, (params.delta + a + t) ** (params.p - 2.0) * t, 0.0)
    return out if out.ndim else float(out)


def conjugate_shifted(params: NFunctionParams, a, t):
    """Closed-form equivalent of the conjugate (phi_a)^*.

    Returns ``((delta + a)^(p-1) + t)^(p'-2) t^2``. This differs from the exact
    Legendre transform by factors bounded above and below uniformly in
    ``a`` and ``t``, which is all that modular error rates require.
    """
    a = _check_nonneg(a)
    t = _check_nonneg(t)
    base = (params.delta + a) ** (params.p - 1.0) + t
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(t > 0, base ** (params.p_conj - 2.0) * t * t, 0.0)
    return out if out.ndim else float(out)


def _invert_scalar(p, d, t, rtol=1e-12, maxiter=200):
    # solve (d + s)^(p-2) s = t for s >= 0 by Newton safeguarded with bisection
    if t == 0.0:
        return 0.0
    f = lambda s: (d + s) ** (p - 2.0) * s - t
    lo, hi = 0.0, max(t, 1.0)
    while f(hi) < 0:
        hi *= 2.0
    s = 0.5 * (lo + hi)
    for _ in range(maxiter):
        fs = f(s)
        if fs > 0:
            hi = s
        else:
            lo = s
        ds = (d + s) ** (p - 3.0) * (d + (p - 1.0) * s)
        s_new = s - fs / ds if ds > 0 else -1.0
        if not lo < s_new < hi:
            s_new = 0.5 * (lo + hi)
        if abs(s_new - s) <= rtol * abs(s_new) or hi - lo <= rtol * hi:
            return s_new
        s = s_new
    raise RuntimeError(f"inversion of phi' did not converge for t={t}")


def inverse_phi_prime(params: NFunctionParams, a, t):
    """Inverse of the strictly increasing map s -> phi_a'(s)."""
    a = _check_nonneg(a)
    t = _check_nonneg(t)
    a, t = np.broadcast_arrays(a, t)
    d = params.delta + a
    out = np.array([_invert_scalar(params.p, di, ti) for di, ti in zip(d.ravel(), t.ravel())])
    out = out.reshape(t.shape)
    return out if out.ndim else float(out)


def conjugate_exact(params: NFunctionParams, a, t):
    """Exact Legendre conjugate (phi_a)^*(t), used as a test oracle.

    Integrating the inverse of phi_a' from 0 to t equals
    ``t s - phi_a(s)`` with ``s = (phi_a')^{-1}(t)``, which is what is evaluated.
    """
    a = _check_nonneg(a)
    t = _check_nonneg(t)
    s = np.asarray(inverse_phi_prime(params, a, t))
    out = t * s - _phi(params.p, params.delta + a, s)
    out = np.maximum(out, 0.0)
    return out if out.ndim else float(out)
