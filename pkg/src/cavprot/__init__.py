"""Cavity protection of an inhomogeneous emitter ensemble: spectra, polariton
linewidths, time-domain two-pulse interferometry, frequency-bin qubit
tomography and classical storage bounds."""
from .bounds import ClassicalBoundQuery, classical_fidelity, n_min
from .dynamics import (EmitterBath, FieldTrace, Filter, FringeTrace, Pulse, PulsePair, fringe_scan,
                       retrieval_efficiency, sample_emitters, simulate)
from .errors import CavprotError, OptimizationError, QuadratureError, RootFindingError, SimulationError
from .faddeeva import faddeeva
from .presets import PRESETS, preset
from .spectral import (PolaritonPair, SpectralDensity, SweepTable, SystemParams, linewidth_sweep,
                       polariton_modes, protection_residual, spectral_density, susceptibility,
                       transmission)
from .tomography import (DensityMatrix2, FringeAmplitudeSet, QubitState, density_matrix, fidelity,
                         mle_project, tomography_amplitudes)

__version__ = "0.1.0"
