"""Scattering off a finite PT-symmetric optical lattice.

``V(x) = W0 (cos^2 x + i V0 sin 2x)`` on ``n`` unit cells, ``W0`` outside.
Interior solutions come from Floquet-Mathieu functions (``V0 != 0.5``) or
Bessel functions (``V0 = 0.5``); a direct ODE integrator serves as oracle.
"""
from .model import (
    SIGN_CONVENTION,
    PotentialSpec,
    Regime,
    RegimeTag,
    exterior_wavenumber,
    map_to_bessel,
    map_to_mathieu,
    potential_value,
    regime_classify,
)
from .oracle import IntegratorConfig, oracle_scatter, oracle_wavefield
from .scattering import (
    Provenance,
    ScatteringResult,
    build_basis,
    invisibility_check,
    scatter,
    solve_scattering,
    spectrum_sweep,
    unitarity_residual,
    wavefield,
)
from .singularity import SingularityCandidate, matching_determinant, ss_refine, ss_scan

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "SIGN_CONVENTION",
    "PotentialSpec",
    "Regime",
    "RegimeTag",
    "exterior_wavenumber",
    "map_to_bessel",
    "map_to_mathieu",
    "potential_value",
    "regime_classify",
    "IntegratorConfig",
    "oracle_scatter",
    "oracle_wavefield",
    "Provenance",
    "ScatteringResult",
    "build_basis",
    "invisibility_check",
    "scatter",
    "solve_scattering",
    "spectrum_sweep",
    "unitarity_residual",
    "wavefield",
    "SingularityCandidate",
    "matching_determinant",
    "ss_refine",
    "ss_scan",
]
