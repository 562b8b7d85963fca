"""The confined PT-symmetric lattice and its reductions to Mathieu/Bessel form.

Sign convention used throughout the package::

    -psi'' + V(x) psi = E psi,   V(x) = W0 (cos^2 x + i V0 sin 2x) on (0, L)
                                 V(x) = W0 elsewhere

so the exterior wavenumber is ``k = sqrt(E - W0)``.  Under this convention
the interior reduces to ``psi'' + (a - 2q cos 2y) psi = 0`` with
``a = E - W0/2`` and to Bessel's equation of order
``kappa = sqrt(E - W0/2)`` in ``xi = sqrt(W0/2) e^{ix}``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SIGN_CONVENTION",
    "CRITICAL_V0",
    "EPSILON_BAND",
    "PotentialSpec",
    "RegimeTag",
    "Regime",
    "MathieuMap",
    "BesselMap",
    "RegimeMismatch",
    "EvanescentExterior",
    "potential_value",
    "potential_rewritten",
    "regime_classify",
    "exterior_wavenumber",
    "map_to_mathieu",
    "map_to_bessel",
]

SIGN_CONVENTION = "-psi'' + V(x) psi = E psi; k = sqrt(E - W0); a = E - W0/2; kappa = sqrt(E - W0/2)"
CRITICAL_V0 = 0.5
EPSILON_BAND = 1e-9
NEAR_INTEGER_TOL = 1e-6


class RegimeMismatch(ValueError):
    pass


class EvanescentExterior(ValueError):
    """E <= W0: the exterior carries no propagating waves."""


@dataclass(frozen=True)
class PotentialSpec:
    w0: float
    v0: float
    n_cells: int

    def __post_init__(self):
        if not self.w0 > 0:
            raise ValueError(f"w0 must be positive, got {self.w0}")
        if not self.v0 >= 0:
            raise ValueError(f"v0 must be non-negative, got {self.v0}")
        if int(self.n_cells) != self.n_cells or self.n_cells < 1:
            raise ValueError(f"n_cells must be a positive integer, got {self.n_cells}")
        object.__setattr__(self, "n_cells", int(self.n_cells))

    @property
    def length(self) -> float:
        return self.n_cells * np.pi

    @property
    def regime(self) -> "Regime":
        return regime_classify(self.v0)


class RegimeTag(enum.Enum):
    SUB_CRITICAL = "SubCritical"
    CRITICAL = "Critical"
    SUPER_CRITICAL = "SuperCritical"


@dataclass(frozen=True)
class Regime:
    tag: RegimeTag
    epsilon_band: float = EPSILON_BAND


@dataclass(frozen=True)
class MathieuMap:
    """Parameters of ``psi'' + (a - 2q cos 2y) psi = 0`` and the map ``x -> y``.

    Sub-critical: ``y = x - i*delta``.
    Super-critical: ``y = pre_rotation - (x - i*delta)``, so ``dy/dx = -1``.
    """

    a: complex
    q: complex
    delta: float
    pre_rotation: float

    @property
    def orientation(self) -> int:
        return -1 if self.pre_rotation else 1

    def y_of_x(self, x):
        shifted = np.asarray(x) - 1j * self.delta
        if self.pre_rotation:
            return self.pre_rotation - shifted
        return shifted


@dataclass(frozen=True)
class BesselMap:
    """``xi(x) = prefactor * e^{ix}`` and order ``kappa`` of the Bessel pair."""

    kappa: complex
    prefactor: complex
    near_integer: bool
    transparency_index: int | None

    def xi_of_x(self, x):
        return self.prefactor * np.exp(1j * np.asarray(x))


def potential_value(spec: PotentialSpec, x):
    """V(x) of the confined lattice; W0 outside ``(0, L)``."""
    x = np.asarray(x, dtype=float)
    inside = (x > 0) & (x < spec.length)
    v = spec.w0 * (np.cos(x) ** 2 + 1j * spec.v0 * np.sin(2 * x))
    out = np.where(inside, v, spec.w0 + 0j)
    return out if out.ndim else complex(out)


def potential_rewritten(spec: PotentialSpec, x):
    """Interior V(x) written through the regime-specific closed form.

    ``(W0/2)(1 + U1)``, ``(W0/2)(1 + e^{2ix})`` or ``(W0/2)(1 + i U2)``.
    Evaluated for every x (no exterior clipping), for identity checks.
    """
    x = np.asarray(x, dtype=float)
    w0, v0 = spec.w0, spec.v0
    tag = regime_classify(v0).tag
    if tag is RegimeTag.SUB_CRITICAL:
        u = np.sqrt(1 - 4 * v0**2) * np.cos(2 * x - 1j * np.arctanh(2 * v0))
    elif tag is RegimeTag.SUPER_CRITICAL:
        u = 1j * np.sqrt(4 * v0**2 - 1) * np.sin(2 * x - 1j * np.arctanh(1 / (2 * v0)))
    else:
        u = np.exp(2j * x)
    return 0.5 * w0 * (1 + u)


def regime_classify(v0: float) -> Regime:
    if v0 < 0:
        raise ValueError("v0 must be non-negative")
    if abs(v0 - CRITICAL_V0) <= EPSILON_BAND:
        return Regime(RegimeTag.CRITICAL)
    if v0 < CRITICAL_V0:
        return Regime(RegimeTag.SUB_CRITICAL)
    return Regime(RegimeTag.SUPER_CRITICAL)


def exterior_wavenumber(spec: PotentialSpec, energy: float) -> float:
    if not energy > spec.w0:
        raise EvanescentExterior(f"energy {energy} must exceed w0 = {spec.w0}")
    return float(np.sqrt(energy - spec.w0))


def map_to_mathieu(spec: PotentialSpec, energy: float) -> MathieuMap:
    w0, v0 = spec.w0, spec.v0
    tag = regime_classify(v0).tag
    a = complex(energy - 0.5 * w0)
    if tag is RegimeTag.SUB_CRITICAL:
        q = complex(0.25 * w0 * np.sqrt(1 - 4 * v0**2))
        return MathieuMap(a, q, 0.5 * float(np.arctanh(2 * v0)), 0.0)
    if tag is RegimeTag.SUPER_CRITICAL:
        q = 1j * 0.25 * w0 * np.sqrt(4 * v0**2 - 1)
        return MathieuMap(a, q, 0.5 * float(np.arctanh(1 / (2 * v0))), np.pi / 4)
    raise RegimeMismatch("the critical point v0 = 0.5 reduces to Bessel form, not Mathieu")


def map_to_bessel(spec: PotentialSpec, energy: float) -> BesselMap:
    if regime_classify(spec.v0).tag is not RegimeTag.CRITICAL:
        raise RegimeMismatch("Bessel reduction only exists at v0 = 0.5")
    kappa = np.sqrt(complex(energy - 0.5 * spec.w0))
    near_int = abs(kappa - np.round(kappa.real)) < NEAR_INTEGER_TOL
    # kappa = m*pi, m >= 1: the transparency energies at odd cell counts
    m = kappa.real / np.pi
    transparency = int(round(m)) if (abs(kappa.imag) < NEAR_INTEGER_TOL
                                    and round(m) >= 1
                                    and abs(m - round(m)) * np.pi < NEAR_INTEGER_TOL) else None
    return BesselMap(kappa, complex(np.sqrt(0.5 * spec.w0)), bool(near_int), transparency)
