"""Roll-wave profiles and their spectral stability."""

from ._core import (
    DomainError,
    NumericalError,
    Params,
    WaveProfile,
    continue_profile,
    hill_spectrum,
    k_of_period,
    period_of_k,
    run_cli,
    selection_kappa,
    solve_profile,
    verdict,
)

__all__ = [
    "DomainError",
    "NumericalError",
    "Params",
    "WaveProfile",
    "continue_profile",
    "hill_spectrum",
    "k_of_period",
    "period_of_k",
    "run_cli",
    "selection_kappa",
    "solve_profile",
    "verdict",
]
