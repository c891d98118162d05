"""Shifted N-functions and the power-law stress, evaluated by hand.

Run with ``python3 demos/01_orlicz_and_stress.py``. The script prints a few
values of the shifted N-function, checks Young's inequality with the exact
convex conjugate and shows how the strain modulus controls the viscosity.
"""
import numpy as np

from pnse.constitutive import StressLaw, f_map, frobenius, stress
from pnse.orlicz import NFunctionParams, conjugate_exact, phi_eval, shifted_eval

params = NFunctionParams(p=3.0, delta=1e-5)

print("phi(t) and its shifted versions for p = 3")
for t in (1e-3, 1e-1, 1.0, 10.0):
    row = [phi_eval(params, t)] + [shifted_eval(params, a, t) for a in (0.1, 1.0)]
    print(f"  t={t:<6g}  phi={row[0]:.4e}  phi_0.1={row[1]:.4e}  phi_1={row[2]:.4e}")

# Young: s t <= phi(s) + phi*(t) for every s, t >= 0, with equality when t = phi'(s).
rng = np.random.default_rng(1)
s, t = rng.exponential(size=(2, 5))
lhs = s * t
rhs = phi_eval(params, s) + conjugate_exact(params, 0.0, t)
print("\nYoung's inequality on five random pairs:", bool(np.all(lhs <= rhs + 1e-12)))

# The stress grows like |D|^(p-1); the quasi-norm quantity F(D) like |D|^(p/2).
law = StressLaw.from_values(3.0)
for scale in (0.01, 1.0, 100.0):
    D = scale * np.array([[0.0, 1.0], [1.0, 0.0]])
    print(f"|D|={frobenius(D):8.3g}  |S(D)|={frobenius(stress(law, D)):10.4g}  |F(D)|={frobenius(f_map(law.params, D)):10.4g}")
