"""Implicit shock tracking for unsteady conservation laws.

A DG discretization of the ALE-transformed law is integrated with DIRK
schemes; at every stage the mesh and state solve an SQP problem whose
objective is the enriched residual.
"""

from .dirk import ButcherTableau, StageProblem, advance_step, tableau
from .dg import DGDiscretization, Dirichlet, Extrapolate, Periodic, PrescribedVelocity
from .laws import Advection, Burgers, Euler, rankine_hugoniot_speed, smoothed_abs
from .mesh import MovingMesh, interval_mesh, smooth_mesh
from .optimizer import SqpReport, SqpSettings, energy_floor_fix, solve_stage, sqp_step
from .problems import PROBLEMS, advec1d, burgers1d, shuosher
from .timeloop import PiecewiseState, ProblemSetup, TrajectoryRecord, initialize, run

__version__ = "0.1.0"

__all__ = [
    "Advection", "Burgers", "ButcherTableau", "DGDiscretization", "Dirichlet", "Euler",
    "Extrapolate", "MovingMesh", "PROBLEMS", "Periodic", "PiecewiseState", "PrescribedVelocity",
    "ProblemSetup", "SqpReport", "SqpSettings", "StageProblem", "TrajectoryRecord", "advance_step",
    "advec1d", "burgers1d", "energy_floor_fix", "initialize", "interval_mesh",
    "rankine_hugoniot_speed", "run", "shuosher", "smooth_mesh", "smoothed_abs", "solve_stage",
    "sqp_step", "tableau",
]
