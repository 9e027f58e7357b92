"""Cavity optomechanics with a Fermi gas acting as the moving mirror."""

from .effmodel import (
    EffectiveModel, PhysicalParams, RegimeReport, build_effective_model, validate_regime,
)
from .errors import (
    ConfigError, FermiMirrorError, HeadroomError, NeverBistableError, NumericalError,
    RegimeError, UnstableStateError,
)
from .stability import StabilityVerdict, classify, drift_matrix, eigenvalues
from .steady import (
    BistabilityCurve, SteadyStateBranch, Threshold, bistability_threshold, hysteresis_trace,
    steady_states, sweep,
)
from .spectra import Spectrum, printed_spectrum, transfer_spectrum
from .dynamics import SimConfig, Trajectory, periodogram, simulate_linear, simulate_meanfield
from .edlab import EDConfig, EDSystem, build_system
from .config import RunConfig, load_config, parse_config

__version__ = "0.1.0"
