"""Series solutions of a three-compartment virus propagation model in
blockchain networks, with numerical cross-checks."""
from .cubic import CubicRoots, DepressedCubic, solve_cubic
from .estimators import ReferenceIntegrator, SeriesSolver
from .exceptions import AbelPropError
from .model import ModelParams, State, Trajectory, integrate_reference, rhs
from .reduction import AbelEquation, CubicData, LienardSystem, lienard_coeffs
from .reversion import revert, revert_oracle
from .solution import SeriesSolution, evaluate, solve_series, validate

__version__ = "0.1.0"
