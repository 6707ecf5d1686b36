"""Numerical lab for the 2D cubic-quintic NLS  i u_t + Lap u + |u|^2 u + |u|^4 u = 0."""

from .functionals import Norms, energy_gradient, evaluate, lambda_star, scale
from .grid import Field, GridSpec, load_field, make_grid, save_field
from .groundstate import (
    GroundState,
    McCurve,
    critical_mass,
    gn_constants,
    minimize_mc,
    ode_oracle,
    petviashvili_Q,
    shoot_Q,
    shoot_radial,
    tabulate_mc,
)
from .mei import Region, dist_to_complement, in_set_A, k_lower_bound, mei_D
from .dynamics import Cutoff, EvolutionTrace, Stepper, classify_fate, evolve

__all__ = [
    "Cutoff", "EvolutionTrace", "Field", "GridSpec", "GroundState", "McCurve", "Norms", "Region", "Stepper",
    "classify_fate", "critical_mass", "dist_to_complement", "energy_gradient", "evaluate", "evolve",
    "gn_constants", "in_set_A", "k_lower_bound", "lambda_star", "load_field", "make_grid", "mei_D",
    "minimize_mc", "ode_oracle", "petviashvili_Q", "save_field", "scale", "shoot_Q", "shoot_radial",
    "tabulate_mc",
]
