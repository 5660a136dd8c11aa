"""Pilot-wave dynamics for DeDonder-Weyl-Kanatchikov field theory on configuration space.

Submodules:
    clifford   gamma matrices and B-valued wave functions in polar form
    classical  DWHJ vectorfields, the oscillator closed form, classical guiding
    quantum    plane-wave profiles, Kanatchikov residuals, eigenmodes, classical limit
    riesz      Riesz tensor, K-current, X-construction, equivariant measure
    guiding    characteristics of the guiding law, plane-wave guiding, Monte Carlo
    scenario   scenario configs, pipelines and CSV/JSON output
"""

from . import classical, clifford, guiding, quantum, riesz, scenario
from .clifford import BElement, PolarData, b_from_polar, build_gamma_basis
from .psigrid import PsiGrid
from .scenario import ScenarioConfig, parse_scenario, run_scenario

__all__ = [
    "BElement", "PolarData", "PsiGrid", "ScenarioConfig", "b_from_polar", "build_gamma_basis",
    "classical", "clifford", "guiding", "parse_scenario", "quantum", "riesz", "run_scenario", "scenario",
]
__version__ = "0.1.0"
