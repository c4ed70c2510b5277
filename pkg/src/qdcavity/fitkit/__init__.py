"""Peak extraction, branch tracking and parameter fits for spectral sweeps."""
from .fits import (
    TWO_LEVEL,
    V_SYSTEM,
    AnticrossingModel,
    FitError,
    FitResult,
    InconsistentPair,
    RabiTable,
    fit_anticrossing,
    fit_zeeman,
    infer_dipole_angle,
    rabi_vs_field,
    zeeman_branches,
)
from .lm import LMResult, levenberg_marquardt, numeric_jacobian
from .peaks import Peak, PeakSet, extract_peaks, noise_level
from .tracking import (
    AntiCrossing,
    NoAntiCrossing,
    detect_anticrossing,
    extract_map_peaks,
    find_anticrossings,
    track_branches,
)
