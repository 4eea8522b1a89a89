"""Rotating rigid bodies with a viscous-liquid-filled box cavity.

Modules
-------
core
    Cavity geometry, inertia tensor and system validation.
fields
    Staggered-grid vector calculus, Helmholtz projection and quadrature.
dynamics
    Coupled time stepping, energy functionals and the run driver.
spectral
    Eigenanalysis of the linearization about a permanent rotation.
stability
    Closed-form stability and attainability tests, exponential fits.
shell
    Scenario files, presets, persistence and the command line.
"""

from .core import Cavity, InertiaModel, SystemSetup, build_system
from .dynamics import State, diagnostics, initial_state, run, step
from .fields import FaceField
from .stability import attainability, classify, fit_decay

__version__ = "0.1.0"

__all__ = [
    "Cavity",
    "FaceField",
    "InertiaModel",
    "State",
    "SystemSetup",
    "attainability",
    "build_system",
    "classify",
    "diagnostics",
    "fit_decay",
    "initial_state",
    "run",
    "step",
]
