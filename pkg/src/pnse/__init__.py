"""Finite element convergence studies for the steady p-Navier-Stokes equations.

The package is organised bottom-up:

``orlicz``
    N-functions, shifts and conjugates.
``constitutive``
    The extra stress law and the F-mapping.
``mesh``, ``quadrature``, ``fespace``
    Simplicial meshes with red refinement, quadrature rules, MINI and
    Taylor-Hood spaces.
``assembly``, ``solver``
    Residual, Jacobian and the Newton solver.
``manufactured``, ``analysis``
    Exact solutions, error quantities, orders of convergence.
``experiment``, ``cli``
    The study runner and its command-line front end.
"""
__version__ = "0.1.0"

from .analysis import LevelErrors, compute_errors, eoc, muckenhoupt_E, theory_rate
from .constitutive import StressLaw
from .experiment import RunConfig, RunResult, emit_figure_data, emit_tables, run
from .fespace import build_space
from .manufactured import make_exact
from .mesh import initial_mesh, red_refine, refine_to_level
from .orlicz import NFunctionParams
from .solver import NewtonConfig, newton_solve

__all__ = [
    "LevelErrors",
    "NFunctionParams",
    "NewtonConfig",
    "RunConfig",
    "RunResult",
    "StressLaw",
    "build_space",
    "compute_errors",
    "emit_figure_data",
    "emit_tables",
    "eoc",
    "initial_mesh",
    "make_exact",
    "muckenhoupt_E",
    "newton_solve",
    "red_refine",
    "refine_to_level",
    "run",
    "theory_rate",
]
