"""Exact jet-level verification of the multicomponent KP hierarchy."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .series import FormalSeries, Monomial, Ring
from .signs import ChargeVector, epsilon, shift_charge
from .tau import TauFunction, dump, dumps, load, loads
from .psdo import MatrixPsdo
from .solutions import SolutionSpec, build, jet_solve, soliton_tau_n1, vacuum_tau
from .config import RunConfig, load_config, parse_config
