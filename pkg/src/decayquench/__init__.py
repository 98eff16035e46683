"""Decay of a one-photon cavity state, its quenching by entanglement, and Zeno iteration."""

from .errors import ConfigError, InvalidParameterError, ModelParseError, NumericalError
from .spectral import SpectralModel, build_flat_band, build_two_mode, dump_custom, load_custom
from .sector import EigenSystem, SectorHamiltonian, assemble_hamiltonian, diagonalize, mean_energy
from .dynamics import (
    AmplitudeSeries,
    amplitude_series,
    decay_rate,
    entangled_decay_rate,
    entangled_probability,
    orthogonal_amplitude,
    recompose_probability,
    short_time_expansion,
    survival_amplitude,
    survival_probability,
)
from .zeno import SectorDensityMatrix, ZenoRunResult, ZenoSchedule, run_schedule, zeno_limit_scan

__version__ = "0.1.0"


def solve(model: SpectralModel, method: str = "dense") -> EigenSystem:
    """Assemble and diagonalise the sector Hamiltonian of ``model``."""
    return diagonalize(assemble_hamiltonian(model), method=method)


__all__ = [
    "AmplitudeSeries",
    "ConfigError",
    "EigenSystem",
    "InvalidParameterError",
    "ModelParseError",
    "NumericalError",
    "SectorDensityMatrix",
    "SectorHamiltonian",
    "SpectralModel",
    "ZenoRunResult",
    "ZenoSchedule",
    "amplitude_series",
    "assemble_hamiltonian",
    "build_flat_band",
    "build_two_mode",
    "decay_rate",
    "diagonalize",
    "dump_custom",
    "entangled_decay_rate",
    "entangled_probability",
    "load_custom",
    "mean_energy",
    "orthogonal_amplitude",
    "recompose_probability",
    "run_schedule",
    "short_time_expansion",
    "solve",
    "survival_amplitude",
    "survival_probability",
    "zeno_limit_scan",
]
