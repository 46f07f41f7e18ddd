"""Spectral laboratory for loss of regularity in supercritical defocusing NLS."""

from .spectral import Field, Grid, GridMismatchError
from .nonlinearity import NonlinearityFns
from .nls import DivergenceError, NlsConfig, NlsState, energy, mass, run, step
from .limit import HorizonError, LimitSolver, LimitState, LimitTrajectory, muk_consistency
from .modenergy import EnergyReport, HydroFields, hydro, modulated_energy, remainder_comparison, theorem_og_sweep
from .wavepacket import WavePacketConfig, commutator_residuals, microlocal_lower_bound, wp_transform
from .inflation import InflationReport, ScalingError, ScalingParams, make_datum, predict_exponent, run_inflation

__version__ = "0.1.0"
