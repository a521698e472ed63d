"""Energy absorption and coherent transfer in a pulse-driven, dissipative dimer."""

from .hamiltonian import (
    DimerParams,
    EigenFrame,
    bare_hamiltonian,
    closed_form_eigenvalues,
    drive_hamiltonian,
    eigensystem,
    s_coefficients,
    total_hamiltonian,
)
from .master_equation import (
    IntegrationFailed,
    LindbladRates,
    ReducedState,
    StepRejected,
    Trajectory,
    evolve,
    lindblad_superoperator,
    rates,
    step_full,
    step_reduced,
)
from .observables import (
    DensityState,
    acceptor_probability,
    concurrence,
    to_bare,
    total_efficiency,
)
from .pulse import GaussianSegment, PulseTrain, amplitude, energy_integral

__version__ = "0.1.0"

__all__ = [
    "DensityState",
    "DimerParams",
    "EigenFrame",
    "GaussianSegment",
    "IntegrationFailed",
    "LindbladRates",
    "PulseTrain",
    "ReducedState",
    "StepRejected",
    "Trajectory",
    "acceptor_probability",
    "amplitude",
    "bare_hamiltonian",
    "closed_form_eigenvalues",
    "concurrence",
    "drive_hamiltonian",
    "eigensystem",
    "energy_integral",
    "evolve",
    "lindblad_superoperator",
    "rates",
    "s_coefficients",
    "step_full",
    "step_reduced",
    "to_bare",
    "total_efficiency",
    "total_hamiltonian",
]
