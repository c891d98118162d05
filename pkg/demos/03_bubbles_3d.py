"""Rotating bubbles near a boundary point and the A2 diagnostics.

Run with ``python3 demos/03_bubbles_3d.py``. No PDE is solved: the script
builds the Kuhn cube, refines it twice and evaluates, for the manufactured
bubble velocity, the discrete A2 product on the smallest active ball and the
normalised A2 quotient on a ball around ``e1`` that shrinks with the mesh.

The first quantity sees a single quadrature point per level, so it equals
the squared point weight. The second grows with the level as more bubbles
of increasing strain enter the ball, which is the degeneration the
construction is designed to produce.
"""
import numpy as np

from pnse.analysis import a2_average, muckenhoupt_E
from pnse.constitutive import StressLaw
from pnse.manufactured import E1, make_exact, truncation_level
from pnse.mesh import initial_mesh_3d, red_refine

law = StressLaw.from_values(3.0)
mesh = initial_mesh_3d()
for level in range(3):
    if level:
        mesh = red_refine(mesh)
    exact = make_exact(3, law.p, case=1, level=level)
    E, n = muckenhoupt_E(mesh, exact, law)
    A2, m = a2_average(mesh, exact, law, E1, 0.5 * 2.0**-level)
    print(f"level {level}: cells={mesh.n_cells:5d}  bubbles={truncation_level(level)}  "
          f"E={E:.3e} ({n} pt)  A2 quotient={A2:.4f} ({m} pts)")

v = exact.velocity(exact.centers + 0.5 * exact.radii[:, None] * np.array([1.0, 0.0, 0.0]))
print("\nvelocity halfway to the rim of each ball:", np.round(np.linalg.norm(v, axis=1), 4))
