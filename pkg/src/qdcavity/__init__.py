"""Coupled quantum dot exciton / cavity mode model under magnetic field and temperature tuning."""
from .exciton import ExcitonParams, SpinBranch, branch_energy, branch_splitting, zeeman_rate
from .polariton import (
    CavityParams,
    ComplexMode,
    CouplingParams,
    UnreachableResonance,
    cavity_linewidth,
    coupled_modes,
    g_from_splitting,
    polariton_modes_2x2,
    polariton_modes_3x3,
    rabi_splitting,
    reduced_coupling,
    resonance_field,
    strong_coupling,
)
from .spectrum import (
    AxisKind,
    Emphasis,
    Spectrum,
    SweepMap,
    TemperatureTuning,
    add_noise,
    sweep_exciton,
    sweep_magnetic,
    sweep_temperature,
    synth_spectrum,
)
from .units import energy_to_wavelength, wavelength_to_energy

__version__ = "0.1.0"
