import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from pnse.orlicz import (
    NFunctionParams,
    conjugate_exact,
    conjugate_shifted,
    inverse_phi_prime,
    phi_eval,
    phi_prime,
    shifted_eval,
    shifted_prime,
)

# ratio conjugate_exact / conjugate_shifted observed in a pilot sweep of
# 2e4 samples: [0.467, 0.714]; the limits 1/2 (t -> 0) and 1/p' (t -> inf)
# are analytic. Frozen with a small margin.
CONJ_BRACKET = (0.45, 0.75)

ps = st.floats(1.2, 5.0)
deltas = st.floats(0.0, 2.0)
ts = st.floats(0.0, 50.0)


class TestParams:
    def test_conjugate_exponent(self):
        assert NFunctionParams(3.0, 0.0).p_conj == pytest.approx(1.5)

    @pytest.mark.parametrize("p", [1.0, 0.5, float("nan")])
    def test_rejects_bad_p(self, p):
        with pytest.raises(ValueError):
            NFunctionParams(p, 0.0)

    def test_rejects_negative_delta(self):
        with pytest.raises(ValueError):
            NFunctionParams(2.5, -1e-3)

    def test_shifted_adds_to_delta(self):
        assert NFunctionParams(2.5, 0.1).shifted(0.4) == NFunctionParams(2.5, 0.5)


class TestPhi:
    def test_p2_is_half_square(self):
        assert phi_eval(NFunctionParams(2.0, 3.7), 3.0) == pytest.approx(4.5, rel=1e-14)

    def test_p3_delta0(self):
        assert phi_eval(NFunctionParams(3.0, 0.0), 2.0) == pytest.approx(8.0 / 3.0, rel=1e-14)

    def test_zero(self):
        assert phi_eval(NFunctionParams(2.7, 0.3), 0.0) == 0.0

    def test_prime_examples(self):
        assert phi_prime(NFunctionParams(3.0, 0.5), 1.0) == pytest.approx(1.5)
        assert phi_prime(NFunctionParams(3.0, 0.5), 0.0) == 0.0
        assert phi_prime(NFunctionParams(2.0, 7.0), 4.0) == pytest.approx(4.0)

    def test_negative_argument_rejected(self):
        par = NFunctionParams(2.5, 1e-5)
        for fn in (phi_eval, phi_prime):
            with pytest.raises(ValueError):
                fn(par, -1.0)
        with pytest.raises(ValueError):
            shifted_eval(par, 0.1, -1.0)
        with pytest.raises(ValueError):
            conjugate_shifted(par, 0.1, -1.0)
        with pytest.raises(ValueError):
            conjugate_exact(par, 0.1, -1.0)

    def test_array_broadcast(self):
        par = NFunctionParams(2.5, 1e-5)
        t = np.linspace(0, 3, 7).reshape(7, 1)
        out = phi_eval(par, t)
        assert out.shape == (7, 1)
        assert isinstance(phi_eval(par, 1.0), float)

    # subnormal delta overflows t/delta inside log1p; the limit returned is still correct
    @pytest.mark.filterwarnings("ignore:overflow encountered:RuntimeWarning")
    @given(p=ps, d=deltas, t=st.floats(1e-3, 20.0))
    def test_matches_numeric_integral(self, p, d, t):
        par = NFunctionParams(p, d)
        ref, _ = quad(lambda s: (d + s) ** (p - 2) * s, 0.0, t, epsabs=0, epsrel=1e-12, limit=200)
        assert phi_eval(par, t) == pytest.approx(ref, rel=1e-9, abs=1e-300)

    def test_tiny_arguments_are_accurate(self):
        # series branch: phi(t) ~ t^2 / 2 * delta^(p-2) for t << delta
        par = NFunctionParams(3.25, 1e-2)
        t = 1e-9
        assert phi_eval(par, t) == pytest.approx(0.5 * t * t * 1e-2 ** 1.25, rel=1e-6)

    def test_convexity_random(self, rng):
        n = 10_000
        p = rng.uniform(1.2, 5.0, n)
        d = rng.uniform(0, 1, n)
        s, t, lam = rng.uniform(0, 10, n), rng.uniform(0, 10, n), rng.uniform(0, 1, n)
        vals = [phi_eval(NFunctionParams(*a[:2]), a[2:]) for a in zip(p, d, lam * s + (1 - lam) * t, s, t)]
        mid = np.array([v[0] for v in vals])
        chord = lam * np.array([v[1] for v in vals]) + (1 - lam) * np.array([v[2] for v in vals])
        assert np.all(mid <= chord * (1 + 1e-12) + 1e-300)


class TestShifted:
    def test_zero_shift(self):
        par = NFunctionParams(2.5, 1e-5)
        assert shifted_eval(par, 0.0, 1.0) == phi_eval(par, 1.0)

    def test_shift_example(self):
        assert shifted_eval(NFunctionParams(3.0, 0.0), 1.0, 1.0) == pytest.approx(phi_eval(NFunctionParams(3.0, 1.0), 1.0))
        # numeric integral of the shifted derivative (a + s)^(p-2) s at a = 1
        ref, _ = quad(lambda s: (1.0 + s) * s, 0.0, 1.0)
        assert shifted_eval(NFunctionParams(3.0, 0.0), 1.0, 1.0) == pytest.approx(ref, rel=1e-13)

    def test_zero_argument(self):
        assert shifted_eval(NFunctionParams(3.0, 0.2), 0.5, 0.0) == 0.0

    # t = 0 with delta = a = 0 evaluates 0**(p-2) in the masked branch of np.where
    @pytest.mark.filterwarnings("ignore:divide by zero:RuntimeWarning", "ignore:invalid value:RuntimeWarning",
                                "ignore:overflow encountered:RuntimeWarning")
    @given(p=ps, d=deltas, a=st.floats(0, 10), t=ts)
    def test_shift_collapse(self, p, d, a, t):
        par = NFunctionParams(p, d)
        assert shifted_eval(par, a, t) == phi_eval(NFunctionParams(p, d + a), t)
        assert shifted_prime(par, a, t) == phi_prime(NFunctionParams(p, d + a), t)

    @given(p=ps, d=deltas, a=st.floats(0, 10), t=st.floats(1e-3, 10))
    def test_shifted_prime_definition(self, p, d, a, t):
        # psi_a'(t) = psi'(a + t) t / (a + t)
        par = NFunctionParams(p, d)
        expected = phi_prime(par, a + t) * t / (a + t)
        assert shifted_prime(par, a, t) == pytest.approx(expected, rel=1e-12)


class TestConjugates:
    def test_closed_form_examples(self):
        assert conjugate_shifted(NFunctionParams(2.5, 0.1), 0.3, 0.0) == 0.0
        assert conjugate_shifted(NFunctionParams(2.0, 0.7), 0.0, 5.0) == pytest.approx(25.0)
        assert conjugate_shifted(NFunctionParams(3.0, 0.0), 0.0, 1.0) == pytest.approx(1.0)

    def test_exact_examples(self):
        assert conjugate_exact(NFunctionParams(2.0, 0.0), 0.0, 3.0) == pytest.approx(4.5, rel=1e-12)
        assert conjugate_exact(NFunctionParams(3.0, 0.0), 0.0, 1.0) == pytest.approx(2.0 / 3.0, rel=1e-12)
        assert conjugate_exact(NFunctionParams(3.0, 0.2), 0.1, 0.0) == 0.0

    @pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
    @given(p=st.floats(1.3, 4.0), d=st.floats(1e-3, 1.0), t=st.floats(1e-3, 20))
    def test_exact_matches_integral_of_inverse(self, p, d, t):
        par = NFunctionParams(p, d)
        # the inverse turns from linear to power growth near s = d^(p-1); split there
        knee = d ** (p - 1.0)
        pts = [knee] if knee < t else None
        ref, _ = quad(lambda s: inverse_phi_prime(par, 0.0, s), 0.0, t, epsrel=1e-12, epsabs=0.0, limit=400, points=pts)
        assert conjugate_exact(par, 0.0, t) == pytest.approx(ref, rel=1e-7)

    @given(p=st.floats(1.3, 4.0), d=st.floats(0.0, 1.0), a=st.floats(0, 3), s=st.floats(1e-6, 1e3))
    def test_inverse_derivative(self, p, d, a, s):
        par = NFunctionParams(p, d)
        u = inverse_phi_prime(par, a, s)
        assert shifted_prime(par, a, u) == pytest.approx(s, rel=1e-11)

    def test_young_inequality_random(self, rng):
        n = 10_000
        p = rng.uniform(2.25, 3.5, n)
        d = 10 ** rng.uniform(-6, 0, n)
        s = 10 ** rng.uniform(-3, 2, n)
        t = 10 ** rng.uniform(-3, 2, n)
        for pi, di, si, ti in zip(p, d, s, t):
            par = NFunctionParams(pi, di)
            assert si * ti <= conjugate_exact(par, 0.0, si) + phi_eval(par, ti) + 1e-12 * si * ti

    def test_young_equality_case(self):
        par = NFunctionParams(2.8, 0.05)
        t = 1.7
        s = phi_prime(par, t)
        assert s * t == pytest.approx(conjugate_exact(par, 0.0, s) + phi_eval(par, t), rel=1e-11)

    def test_equivalence_bracket(self, rng):
        n = 2000
        lo, hi = CONJ_BRACKET
        p = rng.uniform(2.25, 3.5, n)
        d = 10 ** rng.uniform(-6, 0, n)
        a = np.where(rng.random(n) < 0.2, 0.0, 10 ** rng.uniform(-6, 1, n))
        t = 10 ** rng.uniform(-6, 3, n)
        for pi, di, ai, ti in zip(p, d, a, t):
            par = NFunctionParams(pi, di)
            r = conjugate_exact(par, ai, ti) / conjugate_shifted(par, ai, ti)
            assert lo <= r <= hi

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_inversion_iteration_cap(self):
        par = NFunctionParams(2.5, 0.0)
        with pytest.raises(RuntimeError):
            inverse_phi_prime(par, 0.0, float("inf"))
