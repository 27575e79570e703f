"""Exact finite-volume grand-canonical Bose gases and their thermodynamic limit."""

from ._nonext_bec import (
    Ensemble,
    StatePoint,
    __version__,
    bose_density,
    bose_pressure,
    critical_beta,
    critical_density,
    enumerate_exact,
    enumerate_shells,
    evaluate,
    limit_quantities,
    mf_pressure,
    oracle_check,
    scaling_sweep,
    solve_mu,
)

__all__ = [
    "Ensemble",
    "StatePoint",
    "__version__",
    "bose_density",
    "bose_pressure",
    "critical_beta",
    "critical_density",
    "enumerate_exact",
    "enumerate_shells",
    "evaluate",
    "limit_quantities",
    "mf_pressure",
    "oracle_check",
    "scaling_sweep",
    "solve_mu",
]
