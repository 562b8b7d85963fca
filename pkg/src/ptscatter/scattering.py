"""Scattering amplitudes of the confined lattice from exact interior solutions.

The interior solution pair comes from the regime reduction (Floquet-Mathieu
or Bessel); the amplitudes follow from continuity of psi and psi' at
``x = 0`` and ``x = L``, solved as a generic 4x4 complex system.
"""
from __future__ import annotations

import enum
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import specfun
from .model import (
    PotentialSpec,
    RegimeTag,
    exterior_wavenumber,
    map_to_bessel,
    map_to_mathieu,
    regime_classify,
)
from .oracle import IntegratorConfig, integrate_path, schrodinger_field

__all__ = [
    "Provenance",
    "InteriorBasis",
    "SideSolution",
    "ScatteringResult",
    "build_basis",
    "solve_scattering",
    "scatter",
    "spectrum_sweep",
    "wavefield",
    "invisibility_check",
    "unitarity_residual",
    "transfer_from_basis",
]

log = logging.getLogger(__name__)

# pair conditioning |W| / (|u1||u2'| + |u1'||u2|) below this -> numeric pair
PAIR_CONDITION_FLOOR = 1e-8
NEAR_SINGULAR_COND = 1e10
SINGULAR_COND = 1e14


class Provenance(str, enum.Enum):
    FLOQUET_PAIR = "FloquetPair"
    BESSEL_PAIR = "BesselPair"
    NUMERIC_FALLBACK = "NumericFallback"


@dataclass
class InteriorBasis:
    """Two interior solutions and their x-derivatives on [0, L].

    ``evaluate(x)`` returns ``(u, du)``, each of shape ``(2, len(x))``.
    Columns are rescaled so that ``|u_j(0)| + |u_j'(0)| = 1``.
    """

    spec: PotentialSpec
    energy: float
    provenance: Provenance
    _evaluate: Callable
    condition: float = float("nan")
    info: dict = field(default_factory=dict)
    scale: np.ndarray = field(default_factory=lambda: np.ones(2))

    def evaluate(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        u, du = self._evaluate(x)
        return u / self.scale[:, None], du / self.scale[:, None]

    def wronskian(self, x):
        u, du = self.evaluate(x)
        return u[0] * du[1] - du[0] * u[1]


def _pair_condition(u, du) -> float:
    w = abs(u[0] * du[1] - du[0] * u[1])
    return float(w / (abs(u[0]) * abs(du[1]) + abs(du[0]) * abs(u[1])))


def _mathieu_evaluator(mmap, table):
    s = mmap.orientation

    def evaluate(x):
        y = mmap.y_of_x(x)
        u = np.vstack([specfun.mathieu_me(table, 1, y), specfun.mathieu_me(table, -1, y)])
        du = s * np.vstack([specfun.mathieu_me_prime(table, 1, y),
                            specfun.mathieu_me_prime(table, -1, y)])
        return u, du

    return evaluate


def _bessel_evaluator(bmap):
    kappa = bmap.kappa
    orders = (kappa, -kappa)

    def evaluate(x):
        u = np.empty((2, x.size), dtype=complex)
        du = np.empty((2, x.size), dtype=complex)
        for i, xv in enumerate(x):
            m = int(np.floor(xv / np.pi + 0.5))
            xr = xv - m * np.pi
            xi = complex(bmap.xi_of_x(xr))
            for j, order in enumerate(orders):
                val = specfun.bessel_j(order, xi)
                der = specfun.bessel_j_prime(order, xi)
                u[j, i] = specfun.bessel_sheet_shift(order, val, m)
                # d/dx J(xi(x)) = i xi J'(xi), continued with the same phase
                du[j, i] = specfun.bessel_sheet_shift(order, 1j * xi * der, m)
        return u, du

    return evaluate


def _numeric_evaluator(spec, energy, config):
    fld = schrodinger_field(spec, energy)

    def evaluate(x):
        order = np.argsort(x)
        xs = x[order]
        grid = np.concatenate([[0.0], xs])
        pos = grid >= 0
        u = np.empty((2, x.size), dtype=complex)
        du = np.empty((2, x.size), dtype=complex)
        states = np.empty((grid.size, 2, 2), dtype=complex)
        if np.any(~pos):
            neg = np.concatenate([[0.0], grid[~pos][::-1]])
            st, _ = integrate_path(fld, neg, np.eye(2, dtype=complex), config)
            states[~pos] = st[1:][::-1]
        st, _ = integrate_path(fld, grid[pos], np.eye(2, dtype=complex), config)
        states[pos] = st
        states = states[1:]
        u[:, order] = states[:, 0, :].T
        du[:, order] = states[:, 1, :].T
        return u, du

    return evaluate


def build_basis(spec: PotentialSpec, energy: float, config: IntegratorConfig | None = None,
                *, force_numeric: bool = False) -> InteriorBasis:
    """Regime-appropriate interior solution pair at energy ``energy``.

    Falls back to two integrated solutions (initial data (1,0) and (0,1) at
    x = 0) when the Floquet exponent or Bessel order is nearly an integer or
    the analytic pair is poorly conditioned.
    """
    exterior_wavenumber(spec, energy)
    tag = regime_classify(spec.v0).tag
    info: dict = {}
    reason = "forced" if force_numeric else None
    evaluator = None
    provenance = None
    if not force_numeric:
        if tag is RegimeTag.CRITICAL:
            bmap = map_to_bessel(spec, energy)
            info.update(kappa=bmap.kappa, transparency_index=bmap.transparency_index)
            if bmap.near_integer:
                reason = "integer Bessel order"
            else:
                evaluator, provenance = _bessel_evaluator(bmap), Provenance.BESSEL_PAIR
        else:
            mmap = map_to_mathieu(spec, energy)
            info.update(a=mmap.a, q=mmap.q, delta=mmap.delta)
            exponent = specfun.mathieu_nu(mmap.a, mmap.q, config)
            info.update(nu=exponent.nu)
            if exponent.near_integer:
                reason = "integer Floquet exponent"
            else:
                try:
                    table = specfun.mathieu_coeffs(mmap.a, mmap.q, exponent.nu)
                except (specfun.DegenerateExponent, specfun.NoNullVector) as exc:
                    reason = str(exc)
                else:
                    info.update(nu=table.nu, normalization=table.normalization, table=table)
                    evaluator, provenance = _mathieu_evaluator(mmap, table), Provenance.FLOQUET_PAIR
    if evaluator is not None:
        u0, du0 = evaluator(np.array([0.0]))
        cond = _pair_condition(u0[:, 0], du0[:, 0])
        if not cond > PAIR_CONDITION_FLOOR:
            reason = f"ill-conditioned analytic pair ({cond:.1e})"
            evaluator = None
    if evaluator is None:
        log.debug("numeric fallback at E=%s: %s", energy, reason)
        info["fallback_reason"] = reason
        evaluator, provenance = _numeric_evaluator(spec, energy, config), Provenance.NUMERIC_FALLBACK
        u0, du0 = evaluator(np.array([0.0]))
        cond = _pair_condition(u0[:, 0], du0[:, 0])
    scale = np.abs(u0[:, 0]) + np.abs(du0[:, 0])
    return InteriorBasis(spec, energy, provenance, evaluator, cond, info, scale)


@dataclass
class SideSolution:
    side: str
    T: complex
    R: complex
    coefficients: np.ndarray
    condition: float
    flag: str


def _matching_system(basis: InteriorBasis, k: float, L: float, side: str):
    u, du = basis.evaluate(np.array([0.0, L]))
    eL = np.exp(1j * k * L)
    M = np.zeros((4, 4), dtype=complex)
    b = np.zeros(4, dtype=complex)
    M[0, 1:3] = u[:, 0]
    M[1, 1:3] = du[:, 0]
    M[2, 1:3] = u[:, 1]
    M[3, 1:3] = du[:, 1]
    if side == "left":
        # unknowns (R, A1, A2, T)
        M[0, 0], M[1, 0] = -1.0, 1j * k
        M[2, 3], M[3, 3] = -eL, -1j * k * eL
        b[0], b[1] = 1.0, 1j * k
    elif side == "right":
        # unknowns (T, A1, A2, R)
        M[0, 0], M[1, 0] = -1.0, 1j * k
        M[2, 3], M[3, 3] = -eL, -1j * k * eL
        b[2], b[3] = 1.0 / eL, -1j * k / eL
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    return M, b


def solve_scattering(spec: PotentialSpec, energy: float, side: str = "left",
                     basis: InteriorBasis | None = None,
                     config: IntegratorConfig | None = None) -> SideSolution:
    """Amplitudes for one incidence side.

    A singular matching system (a spectral singularity) is reported through
    ``flag`` rather than raised.
    """
    k = exterior_wavenumber(spec, energy)
    basis = basis or build_basis(spec, energy, config)
    L = spec.length
    M, b = _matching_system(basis, k, L, side)
    rs = 1.0 / np.max(np.abs(M), axis=1)
    Ms = M * rs[:, None]
    cs = 1.0 / np.max(np.abs(Ms), axis=0)
    Ms = Ms * cs[None, :]
    cond = float(np.linalg.cond(Ms))
    try:
        z = np.linalg.solve(Ms, b * rs) * cs
    except np.linalg.LinAlgError:
        nan = complex(np.nan, np.nan)
        return SideSolution(side, nan, nan, np.array([nan, nan]), np.inf, "singular")
    flag = "ok"
    if cond > SINGULAR_COND:
        flag = "singular"
    elif cond > NEAR_SINGULAR_COND:
        flag = "near_singular"
    coeffs = z[1:3].copy()
    if side == "left":
        R, T = z[0], z[3]
    else:
        # re-reference the right-incidence state to x = L:
        # e^{-ik(x-L)} + R e^{ik(x-L)} for x > L, T e^{-ik(x-L)} for x < 0
        T, R = z[0], z[3] * np.exp(2j * k * L)
        coeffs *= np.exp(1j * k * L)
    return SideSolution(side, complex(T), complex(R), coeffs, cond, flag)


def unitarity_residual(T: complex, r_left: complex, r_right: complex) -> float:
    """| ||T|^2 - 1| - sqrt(|R_R|^2 |R_L|^2) |."""
    return float(abs(abs(abs(T) ** 2 - 1.0) - abs(r_left) * abs(r_right)))


@dataclass
class ScatteringResult:
    E: float
    k: float
    T: complex
    R_L: complex
    R_R: complex
    unitarity_residual: float
    basis_provenance: Provenance
    T_right: complex = complex(np.nan)
    condition: float = float("nan")
    flag: str = "ok"
    fallback_reason: str | None = None
    normalization: str | None = None

    @property
    def T2(self) -> float:
        return abs(self.T) ** 2

    @property
    def RL2(self) -> float:
        return abs(self.R_L) ** 2

    @property
    def RR2(self) -> float:
        return abs(self.R_R) ** 2


_FLAG_RANK = {"ok": 0, "near_singular": 1, "singular": 2, "error": 3}


def scatter(spec: PotentialSpec, energy: float, config: IntegratorConfig | None = None,
            basis: InteriorBasis | None = None) -> ScatteringResult:
    k = exterior_wavenumber(spec, energy)
    basis = basis or build_basis(spec, energy, config)
    left = solve_scattering(spec, energy, "left", basis)
    right = solve_scattering(spec, energy, "right", basis)
    flag = max(left.flag, right.flag, key=_FLAG_RANK.__getitem__)
    return ScatteringResult(
        E=float(energy), k=k, T=left.T, R_L=left.R, R_R=right.R,
        unitarity_residual=unitarity_residual(left.T, left.R, right.R),
        basis_provenance=basis.provenance, T_right=right.T,
        condition=max(left.condition, right.condition), flag=flag,
        fallback_reason=basis.info.get("fallback_reason"),
        normalization=basis.info.get("normalization"),
    )


def _sweep_point(spec, energy, config):
    try:
        return scatter(spec, energy, config)
    except Exception as exc:  # noqa: BLE001 - a sweep records failures, it never aborts
        log.warning("scatter failed at E=%s: %s", energy, exc)
        nan = complex(np.nan, np.nan)
        return ScatteringResult(float(energy), float(np.sqrt(max(energy - spec.w0, 0.0))),
                                nan, nan, nan, float("nan"), Provenance.NUMERIC_FALLBACK,
                                flag="error")


def spectrum_sweep(spec: PotentialSpec, energies, config: IntegratorConfig | None = None,
                   workers: int = 1) -> list[ScatteringResult]:
    """Scatter at every grid energy; results are returned in grid order."""
    energies = [float(e) for e in energies]
    if any(not e > spec.w0 for e in energies):
        raise ValueError("all sweep energies must exceed w0")
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(lambda e: _sweep_point(spec, e, config), energies))
    return [_sweep_point(spec, e, config) for e in energies]


def transfer_from_basis(basis: InteriorBasis, x_from: float, x_to: float) -> np.ndarray:
    """2x2 transfer matrix (psi, psi') at x_from -> x_to built from a solution pair."""
    u, du = basis.evaluate(np.array([x_from, x_to]))
    U0 = np.array([[u[0, 0], u[1, 0]], [du[0, 0], du[1, 0]]])
    U1 = np.array([[u[0, 1], u[1, 1]], [du[0, 1], du[1, 1]]])
    return U1 @ np.linalg.inv(U0)


def wavefield(spec: PotentialSpec, energy: float, side: str, x_grid,
              config: IntegratorConfig | None = None) -> np.ndarray:
    """psi(x) for unit incident amplitude from ``side``.

    Plane waves outside [0, L]; the solved combination of the interior pair
    inside, continued cell to cell through the pair's own quasi-periodicity.
    """
    k = exterior_wavenumber(spec, energy)
    L = spec.length
    x = np.atleast_1d(np.asarray(x_grid, dtype=float))
    basis = build_basis(spec, energy, config)
    sol = solve_scattering(spec, energy, side, basis)
    psi = np.empty(x.shape, dtype=complex)
    left = x < 0
    right = x > L
    inside = ~(left | right)
    if side == "left":
        psi[left] = np.exp(1j * k * x[left]) + sol.R * np.exp(-1j * k * x[left])
        psi[right] = sol.T * np.exp(1j * k * x[right])
    else:
        psi[left] = sol.T * np.exp(-1j * k * (x[left] - L))
        psi[right] = np.exp(-1j * k * (x[right] - L)) + sol.R * np.exp(1j * k * (x[right] - L))
    if np.any(inside):
        u, _ = basis.evaluate(x[inside])
        psi[inside] = sol.coefficients @ u
    return psi


def wavefield_derivative(spec: PotentialSpec, energy: float, side: str, x_grid,
                         config: IntegratorConfig | None = None) -> np.ndarray:
    """psi'(x) matching :func:`wavefield`."""
    k = exterior_wavenumber(spec, energy)
    L = spec.length
    x = np.atleast_1d(np.asarray(x_grid, dtype=float))
    basis = build_basis(spec, energy, config)
    sol = solve_scattering(spec, energy, side, basis)
    d = np.empty(x.shape, dtype=complex)
    left = x < 0
    right = x > L
    inside = ~(left | right)
    ik = 1j * k
    if side == "left":
        d[left] = ik * np.exp(ik * x[left]) - ik * sol.R * np.exp(-ik * x[left])
        d[right] = ik * sol.T * np.exp(ik * x[right])
    else:
        d[left] = -ik * sol.T * np.exp(-ik * (x[left] - L))
        d[right] = -ik * np.exp(-ik * (x[right] - L)) + ik * sol.R * np.exp(ik * (x[right] - L))
    if np.any(inside):
        _, du = basis.evaluate(x[inside])
        d[inside] = sol.coefficients @ du
    return d


@dataclass
class InvisibilityReport:
    w0: float
    n_cells: int
    energies: list
    T2: list
    RL2: list
    RR2: list
    violations: list
    finite_left_count: int
    refused: str | None = None

    @property
    def passed(self) -> bool:
        return self.refused is None and not self.violations


def invisibility_check(spec: PotentialSpec, energies, *, tol: float = 1e-10,
                       left_threshold: float = 1e-6,
                       config: IntegratorConfig | None = None) -> InvisibilityReport:
    """Check zero right reflection with unit transmission at v0 = 0.5, even n.

    Violations of ``|R_R|^2 < tol`` or ``||T|^2 - 1| < tol`` are listed per
    energy; energies with ``|R_L|^2 > left_threshold`` are counted.
    Odd cell counts and non-critical v0 are refused, not evaluated.
    """
    energies = [float(e) for e in energies]
    refused = None
    if regime_classify(spec.v0).tag is not RegimeTag.CRITICAL:
        refused = "v0 must be 0.5"
    elif spec.n_cells % 2:
        refused = "n_cells must be even"
    if refused:
        return InvisibilityReport(spec.w0, spec.n_cells, energies, [], [], [], [], 0, refused)
    t2, rl2, rr2, bad = [], [], [], []
    for e in energies:
        res = scatter(spec, e, config)
        t2.append(res.T2)
        rl2.append(res.RL2)
        rr2.append(res.RR2)
        if not res.RR2 < tol:
            bad.append({"E": e, "quantity": "RR2", "value": res.RR2})
        if not abs(res.T2 - 1.0) < tol:
            bad.append({"E": e, "quantity": "T2-1", "value": res.T2 - 1.0})
    finite = sum(v > left_threshold for v in rl2)
    return InvisibilityReport(spec.w0, spec.n_cells, energies, t2, rl2, rr2, bad, finite)
