"""Dispersion of mobile robots on port-labeled anonymous grids."""

from .adversary import FixedSchedule, NoCrashes, RandomCrashes, TargetScouts
from .alg1 import Alg1
from .alg2 import Alg2
from .alg3 import Alg3
from .checks import check_dispersion
from .engine import RoundTrace, SimulationResult, run_simulation
from .grid import GridSpec, build_grid, rectangle, square

__version__ = "0.1.0"

__all__ = [
    "Alg1", "Alg2", "Alg3", "FixedSchedule", "GridSpec", "NoCrashes", "RandomCrashes",
    "RoundTrace", "SimulationResult", "TargetScouts", "build_grid", "check_dispersion",
    "rectangle", "run_simulation", "square",
]
