"""Direct numerical integration of the interior wave equation.

Everything here is independent of the special-function machinery in
:mod:`ptscatter.specfun`: amplitudes come from brute-force propagation of
``psi'' = g(x) psi`` with an adaptive Dormand-Prince 8(5,3) integrator.
The only thing :mod:`ptscatter.specfun` borrows from this module is the
one-period monodromy matrix used to pin down the Floquet exponent.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.integrate import DOP853 as _DOP853

from .model import PotentialSpec, exterior_wavenumber

__all__ = [
    "IntegratorConfig",
    "CoefficientField",
    "IntegrationError",
    "StepLimitExceeded",
    "schrodinger_field",
    "mathieu_field",
    "integrate_ivp",
    "integrate_path",
    "transfer_matrix",
    "monodromy",
    "oracle_scatter",
    "oracle_wavefield",
]

# Butcher tableau of DOP853, taken verbatim from scipy.
_A = np.ascontiguousarray(_DOP853.A, dtype=np.float64)
_B = np.ascontiguousarray(_DOP853.B, dtype=np.float64)
_C = np.ascontiguousarray(_DOP853.C, dtype=np.float64)
_E3 = np.ascontiguousarray(_DOP853.E3, dtype=np.float64)
_E5 = np.ascontiguousarray(_DOP853.E5, dtype=np.float64)
_NSTAGES = _DOP853.n_stages

_OK = 0
_STEP_LIMIT = 1


class IntegrationError(RuntimeError):
    """Raised when the oracle integrator cannot complete a span."""


class StepLimitExceeded(IntegrationError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_steps: int = 500_000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("integrator tolerances must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass(frozen=True)
class CoefficientField:
    """``g(x) = const + cos2 * cos(2x) + sin2 * sin(2x)`` in ``psi'' = g psi``.

    Both the Schrodinger interior and the Mathieu equation have this form,
    which lets the integrator kernel stay a compiled closed-form loop.
    """

    const: complex
    cos2: complex = 0.0
    sin2: complex = 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.const + self.cos2 * np.cos(2 * x) + self.sin2 * np.sin(2 * x)


def schrodinger_field(spec: PotentialSpec, energy: float) -> CoefficientField:
    """Interior field of ``-psi'' + V psi = E psi``, i.e. ``g = V - E``."""
    w0, v0 = spec.w0, spec.v0
    return CoefficientField(0.5 * w0 - energy, 0.5 * w0, 1j * w0 * v0)


def mathieu_field(a: complex, q: complex) -> CoefficientField:
    """Field of ``psi'' + (a - 2q cos 2y) psi = 0``."""
    return CoefficientField(-complex(a), 2 * complex(q), 0.0)


@njit(cache=True)
def _g(c0, cc, cs, x):
    return c0 + cc * np.cos(2.0 * x) + cs * np.sin(2.0 * x)


@njit(cache=True)
def _rhs(c0, cc, cs, x, y, out):
    gx = _g(c0, cc, cs, x)
    for j in range(y.shape[1]):
        out[0, j] = y[1, j]
        out[1, j] = gx * y[0, j]


@njit(cache=True)
def _propagate(c0, cc, cs, xs, y0, rtol, atol, max_steps, A, B, C, E3, E5):
    """Integrate from xs[0] through every point of the monotone grid xs.

    Returns (states[len(xs), 2, m], summed local error estimate, steps, status).
    """
    npts = xs.shape[0]
    m = y0.shape[1]
    out = np.empty((npts, 2, m), dtype=np.complex128)
    out[0] = y0
    y = y0.copy()
    K = np.empty((_NSTAGES + 1, 2, m), dtype=np.complex128)
    ytmp = np.empty((2, m), dtype=np.complex128)
    ynew = np.empty((2, m), dtype=np.complex128)
    f = np.empty((2, m), dtype=np.complex128)
    err_sum = 0.0
    nsteps = 0
    x = xs[0]
    if npts < 2:
        return out, err_sum, nsteps, 0
    direction = 1.0 if xs[npts - 1] >= xs[0] else -1.0
    gmax = abs(c0) + abs(cc) + abs(cs)
    h = direction * min(0.1, 0.5 / (1.0 + np.sqrt(gmax)))
    _rhs(c0, cc, cs, x, y, f)
    for i in range(1, npts):
        target = xs[i]
        while direction * (target - x) > 0.0:
            if nsteps >= max_steps:
                return out, err_sum, nsteps, 1
            if direction * (x + h - target) > 0.0:
                h = target - x
            while True:
                K[0] = f
                for s in range(1, _NSTAGES):
                    for r in range(2):
                        for j in range(m):
                            acc = 0j
                            for p in range(s):
                                acc += A[s, p] * K[p, r, j]
                            ytmp[r, j] = y[r, j] + h * acc
                    _rhs(c0, cc, cs, x + C[s] * h, ytmp, K[s])
                for r in range(2):
                    for j in range(m):
                        acc = 0j
                        for p in range(_NSTAGES):
                            acc += B[p] * K[p, r, j]
                        ynew[r, j] = y[r, j] + h * acc
                _rhs(c0, cc, cs, x + h, ynew, K[_NSTAGES])
                e5n = 0.0
                e3n = 0.0
                emax = 0.0
                for r in range(2):
                    for j in range(m):
                        a5 = 0j
                        a3 = 0j
                        for p in range(_NSTAGES + 1):
                            a5 += E5[p] * K[p, r, j]
                            a3 += E3[p] * K[p, r, j]
                        sc = atol + rtol * max(abs(y[r, j]), abs(ynew[r, j]))
                        e5n += abs(a5 / sc) ** 2
                        e3n += abs(a3 / sc) ** 2
                        emax = max(emax, abs(h * a5))
                if e5n == 0.0 and e3n == 0.0:
                    err = 0.0
                else:
                    err = abs(h) * e5n / np.sqrt((e5n + 0.01 * e3n) * 2 * m)
                if err < 1.0:
                    break
                h = h * max(0.2, 0.9 * err ** (-1.0 / 8.0))
            x = x + h
            nsteps += 1
            err_sum += emax
            for r in range(2):
                for j in range(m):
                    y[r, j] = ynew[r, j]
                    f[r, j] = K[_NSTAGES, r, j]
            if err == 0.0:
                fac = 10.0
            else:
                fac = min(10.0, 0.9 * err ** (-1.0 / 8.0))
            h = h * fac
        x = target
        out[i] = y
    return out, err_sum, nsteps, 0


def integrate_path(field: CoefficientField, xs, initial, config: IntegratorConfig | None = None):
    """Integrate ``psi'' = g psi`` through the monotone grid ``xs``.

    ``initial`` is ``(psi, psi')`` or a 2 x m array of such columns.
    Returns ``(states, error_estimate)`` with ``states`` of shape
    ``(len(xs), 2)`` or ``(len(xs), 2, m)``.
    """
    config = config or IntegratorConfig()
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    d = np.diff(xs)
    if d.size and not (np.all(d >= 0) or np.all(d <= 0)):
        raise ValueError("integration grid must be monotone")
    y0 = np.asarray(initial, dtype=np.complex128)
    vector = y0.ndim == 1
    y0 = np.ascontiguousarray(y0.reshape(2, -1))
    states, err, _, status = _propagate(
        complex(field.const), complex(field.cos2), complex(field.sin2),
        xs, y0, config.rel_tol, config.abs_tol, config.max_steps,
        _A, _B, _C, _E3, _E5,
    )
    if status == _STEP_LIMIT:
        raise StepLimitExceeded(f"step limit {config.max_steps} exceeded")
    if vector:
        states = states[:, :, 0]
    return states, err


def integrate_ivp(field: CoefficientField, x_from: float, x_to: float, initial,
                  config: IntegratorConfig | None = None, *, return_error: bool = False):
    """Propagate ``(psi, psi')`` from ``x_from`` to ``x_to``."""
    states, err = integrate_path(field, [x_from, x_to], initial, config)
    if return_error:
        return states[-1], err
    return states[-1]


def transfer_matrix(field: CoefficientField, x_from: float, x_to: float,
                    config: IntegratorConfig | None = None) -> np.ndarray:
    """2x2 matrix mapping ``(psi, psi')`` at ``x_from`` to ``x_to``."""
    return integrate_ivp(field, x_from, x_to, np.eye(2, dtype=complex), config)


def monodromy(a: complex, q: complex, config: IntegratorConfig | None = None) -> np.ndarray:
    """One-period (pi) fundamental matrix of the Mathieu equation.

    Columns are the solutions started from ``(1, 0)`` and ``(0, 1)`` at
    ``y = 0``; the determinant is 1 by Liouville's theorem.
    """
    return transfer_matrix(mathieu_field(a, q), 0.0, np.pi, config)


def oracle_scatter(spec: PotentialSpec, energy: float, side: str = "left",
                   config: IntegratorConfig | None = None) -> dict:
    """Scattering amplitudes by direct integration.

    Left incidence starts from the outgoing data ``(e^{ikL}, ik e^{ikL})`` at
    ``x = L`` and integrates back to ``x = 0``; right incidence mirrors this.
    """
    k = exterior_wavenumber(spec, energy)
    L = spec.length
    field = schrodinger_field(spec, energy)
    if side == "left":
        eL = np.exp(1j * k * L)
        (psi, dpsi), err = integrate_ivp(field, L, 0.0, [eL, 1j * k * eL], config,
                                         return_error=True)
        incident = 0.5 * (psi + dpsi / (1j * k))
        reflected = 0.5 * (psi - dpsi / (1j * k))
        T, R = 1.0 / incident, reflected / incident
    elif side == "right":
        # phases referenced to x = L: e^{-ik(x-L)} + R e^{ik(x-L)} right of the cell
        (psi, dpsi), err = integrate_ivp(field, 0.0, L, [1.0, -1j * k], config,
                                         return_error=True)
        incoming = 0.5 * (psi - dpsi / (1j * k))
        outgoing = 0.5 * (psi + dpsi / (1j * k))
        T, R = np.exp(-1j * k * L) / incoming, outgoing / incoming
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    # the error of psi propagates into the amplitudes through 1/incident
    return {"T": complex(T), "R": complex(R), "error": float(err * abs(T) * (1 + 1 / k))}


def oracle_wavefield(spec: PotentialSpec, energy: float, side: str, x_grid,
                     config: IntegratorConfig | None = None) -> np.ndarray:
    """Scattering state on ``x_grid`` by direct integration (for cross-checks).

    Normalized to unit incident amplitude, like
    :func:`ptscatter.scattering.wavefield`.
    """
    k = exterior_wavenumber(spec, energy)
    L = spec.length
    x = np.asarray(x_grid, dtype=float)
    amp = oracle_scatter(spec, energy, side, config)
    T, R = amp["T"], amp["R"]
    psi = np.empty(x.shape, dtype=complex)
    if side == "left":
        left = x <= 0
        right = x >= L
        psi[left] = np.exp(1j * k * x[left]) + R * np.exp(-1j * k * x[left])
        psi[right] = T * np.exp(1j * k * x[right])
        start = (1.0 + R, 1j * k * (1.0 - R))
    else:
        left = x <= 0
        right = x >= L
        psi[left] = T * np.exp(-1j * k * (x[left] - L))
        psi[right] = np.exp(-1j * k * (x[right] - L)) + R * np.exp(1j * k * (x[right] - L))
        t0 = T * np.exp(1j * k * L)
        start = (t0, -1j * k * t0)
    inside = ~(left | right)
    if np.any(inside):
        xi = np.sort(x[inside])
        order = np.argsort(x[inside])
        states, _ = integrate_path(schrodinger_field(spec, energy),
                                   np.concatenate([[0.0], xi]), start, config)
        vals = np.empty(xi.shape, dtype=complex)
        vals[order] = states[1:, 0]
        psi[inside] = vals
    return psi
