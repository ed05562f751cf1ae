"""Dynamical-map solvers for the zero-temperature Ohmic spin-boson model.

Self-consistent memory-kernel and time-local evolution superoperators, the
matching weak-coupling reference solvers, and the observables built on them
(steady states, two-time correlations, spectra, transmission).
"""

__version__ = "0.1.0"

from .bath import BathSpec, CorrelationTable, correlation, spectral_density, tabulate
from .dynmaps import (
    ConvergenceStudy,
    KernelTrajectory,
    ModelSpec,
    PropagatorTrajectory,
    born_kernel,
    convergence_study,
    nca_kernel,
    solve_born,
    solve_born_markov,
    solve_nca,
    solve_nca_markov,
)
from .observables import (
    Spectrum,
    TimeSeries,
    classify_dynamics,
    evolve_expectations,
    regression_correlation,
    relaxation_time,
    spectrum_cz,
    spectrum_cz_resolvent,
    steady_state,
    susceptibility_and_transmission,
)
from .qops import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    density_diagnostics,
    devectorize,
    left_mult,
    liouvillian,
    right_mult,
    superop_exp,
    vectorize,
)

__all__ = [
    "__version__",
    "BathSpec",
    "CorrelationTable",
    "correlation",
    "spectral_density",
    "tabulate",
    "ModelSpec",
    "PropagatorTrajectory",
    "KernelTrajectory",
    "ConvergenceStudy",
    "nca_kernel",
    "born_kernel",
    "solve_nca",
    "solve_nca_markov",
    "solve_born",
    "solve_born_markov",
    "convergence_study",
    "TimeSeries",
    "Spectrum",
    "evolve_expectations",
    "steady_state",
    "regression_correlation",
    "spectrum_cz",
    "spectrum_cz_resolvent",
    "susceptibility_and_transmission",
    "classify_dynamics",
    "relaxation_time",
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "vectorize",
    "devectorize",
    "left_mult",
    "right_mult",
    "liouvillian",
    "superop_exp",
    "density_diagnostics",
]
