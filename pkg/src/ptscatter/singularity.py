"""Spectral singularities: real (v0, E) where the outgoing-only problem is solvable.

A purely outgoing solution (``e^{-ikx}`` left of the cell, ``e^{ikx}`` right
of it) exists exactly where the 2x2 matching determinant vanishes; there
``T``, ``R_L`` and ``R_R`` all have a pole.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import minimum_filter

from .model import PotentialSpec, RegimeTag, exterior_wavenumber, regime_classify
from .oracle import IntegratorConfig, schrodinger_field, transfer_matrix
from .scattering import build_basis, transfer_from_basis

__all__ = [
    "SingularityCandidate",
    "matching_determinant",
    "determinant_from_transfer",
    "ss_scan",
    "ss_refine",
    "CANDIDATE_THRESHOLD",
    "REFINED_THRESHOLD",
]

log = logging.getLogger(__name__)

CANDIDATE_THRESHOLD = 1e-2
REFINED_THRESHOLD = 1e-8
MAX_NEWTON = 50


@dataclass
class SingularityCandidate:
    v0: float
    e: float
    det_magnitude: float
    refined: bool
    l_cells: int
    w0: float
    diagnostics: dict = field(default_factory=dict)


def determinant_from_transfer(M: np.ndarray, k: float) -> complex:
    """Normalized outgoing-only determinant from the interior transfer matrix.

    Rows are the outgoing conditions ``psi' + ik psi = 0`` at x = 0 and
    ``psi' - ik psi = 0`` at x = L written in the basis of solutions with
    unit initial data at x = 0; each row is scaled to unit norm.
    """
    row0 = np.array([1j * k, 1.0])
    rowL = np.array([M[1, 0] - 1j * k * M[0, 0], M[1, 1] - 1j * k * M[0, 1]])
    det = row0[0] * rowL[1] - row0[1] * rowL[0]
    return complex(det / (np.linalg.norm(row0) * np.linalg.norm(rowL)))


def matching_determinant(spec: PotentialSpec, energy: float, *, method: str = "analytic",
                         config: IntegratorConfig | None = None) -> complex:
    """Outgoing-only matching determinant (normalized, |D| <= 1).

    ``method="analytic"`` uses the regime's exact interior pair;
    ``method="oracle"`` uses a directly integrated transfer matrix.
    """
    k = exterior_wavenumber(spec, energy)
    if method == "analytic":
        M = transfer_from_basis(build_basis(spec, energy, config), 0.0, spec.length)
    elif method == "oracle":
        cell = transfer_matrix(schrodinger_field(spec, energy), 0.0, np.pi, config)
        M = np.linalg.matrix_power(cell, spec.n_cells)
    else:
        raise ValueError(f"unknown method {method!r}")
    return determinant_from_transfer(M, k)


def _grid(lo, hi, num, exclusive_below=None):
    lo, hi = float(lo), float(hi)
    if exclusive_below is not None and lo <= exclusive_below:
        # open lower end: drop the threshold point itself
        return np.linspace(exclusive_below, hi, num + 1)[1:]
    return np.linspace(lo, hi, num)


def ss_scan(w0: float, n_cells: int, v0_range, e_range, grid_density=200, *,
            method: str = "analytic", threshold: float = CANDIDATE_THRESHOLD,
            polish_steps: int = 4, config: IntegratorConfig | None = None):
    """Coarse search for spectral singularities in a (v0, E) window.

    |D| is tabulated on the grid; every strict local minimum gets a few
    Newton steps confined to its grid cell (zeros are sharp, so the nearest
    node can sit well above the threshold).  Minima whose polished |D| is
    below ``threshold`` are returned unrefined, ordered by (v0, e).
    ``grid_density`` is an int or a ``(n_v0, n_e)`` pair.
    """
    v_lo, v_hi = v0_range
    if not v_lo > 0.5:
        raise ValueError("spectral singularity scans need v0_range above 0.5")
    nv, ne = (grid_density, grid_density) if np.isscalar(grid_density) else grid_density
    v0s = _grid(v_lo, v_hi, int(nv))
    es = _grid(e_range[0], e_range[1], int(ne), exclusive_below=w0)
    grid = np.empty((v0s.size, es.size))
    for i, v0 in enumerate(v0s):
        spec = PotentialSpec(w0, float(v0), n_cells)
        for j, e in enumerate(es):
            try:
                grid[i, j] = abs(matching_determinant(spec, float(e), method=method, config=config))
            except Exception as exc:  # noqa: BLE001
                log.warning("determinant failed at v0=%s E=%s: %s", v0, e, exc)
                grid[i, j] = np.inf
    footprint = np.ones((3, 3), dtype=bool)
    footprint[1, 1] = False
    neighbours = minimum_filter(grid, footprint=footprint, mode="constant", cval=np.inf)
    mask = (grid < neighbours) & np.isfinite(grid)
    dv = (v0s[-1] - v0s[0]) / max(v0s.size - 1, 1)
    de = (es[-1] - es[0]) / max(es.size - 1, 1)
    out = []
    for i, j in zip(*np.nonzero(mask)):
        x0 = np.array([v0s[i], es[j]])
        x, f, _, _, _ = _newton(w0, n_cells, x0, polish_steps, 0.0, 0.0, config,
                                   box=(x0 - [dv, de], x0 + [dv, de]))
        mag = float(np.hypot(*f))
        if mag < threshold:
            out.append(SingularityCandidate(float(x[0]), float(x[1]), mag, False,
                                            int(n_cells), float(w0),
                                            {"grid_node": (float(x0[0]), float(x0[1])),
                                             "grid_value": float(grid[i, j])}))
    # several coarse minima can polish onto the same zero: keep the best one
    out.sort(key=lambda c: c.det_magnitude)
    unique = []
    for c in out:
        if all(abs(c.v0 - u.v0) > dv or abs(c.e - u.e) > de for u in unique):
            unique.append(c)
    unique.sort(key=lambda c: (c.v0, c.e))
    return unique


def _det_vector(w0, n, v0, e, config):
    d = matching_determinant(PotentialSpec(w0, v0, n), e, config=config)
    return np.array([d.real, d.imag])


def _newton(w0, n, x, max_iter, tol, step_tol, config, box=None):
    """Damped Newton iteration; returns (x, f, converged, history, reason)."""
    history = []

    def inside(p):
        if box is not None and (np.any(p < box[0]) or np.any(p > box[1])):
            return False
        return p[1] > w0 and regime_classify(p[0]).tag is RegimeTag.SUPER_CRITICAL

    if not inside(x):
        return x, np.array([np.inf, 0.0]), False, history, "seed outside the super-critical region"
    f = _det_vector(w0, n, x[0], x[1], config)
    for _ in range(max_iter):
        fn = float(np.hypot(*f))
        history.append((float(x[0]), float(x[1]), fn))
        J = np.empty((2, 2))
        for col in range(2):
            h = 1e-7 * max(1.0, abs(x[col]))
            dx = np.zeros(2)
            dx[col] = h
            fp = _det_vector(w0, n, *(x + dx), config)
            fm = _det_vector(w0, n, *(x - dx), config)
            J[:, col] = (fp - fm) / (2 * h)
        try:
            step = -np.linalg.solve(J, f)
        except np.linalg.LinAlgError:
            return x, f, False, history, "singular Jacobian"
        lam = 1.0
        while lam > 1e-6:
            trial = x + lam * step
            if inside(trial):
                ft = _det_vector(w0, n, *trial, config)
                if np.hypot(*ft) < fn or fn < tol:
                    break
            lam *= 0.5
        else:
            return x, f, False, history, "line search stalled"
        x, f = trial, ft
        if np.hypot(*f) < tol and np.linalg.norm(lam * step) < step_tol:
            history.append((float(x[0]), float(x[1]), float(np.hypot(*f))))
            return x, f, True, history, None
    return x, f, False, history, "iteration cap reached"


def ss_refine(candidate: SingularityCandidate, *, config: IntegratorConfig | None = None,
              max_iter: int = MAX_NEWTON, tol: float = REFINED_THRESHOLD,
              step_tol: float = 1e-10) -> SingularityCandidate:
    """Damped Newton on (Re D, Im D) = 0 over (v0, E), finite-difference Jacobian.

    Returns a new candidate; on failure ``refined`` stays False and the
    reason is in ``diagnostics``.
    """
    x0 = np.array([candidate.v0, candidate.e], dtype=float)
    x, f, ok, history, reason = _newton(candidate.w0, candidate.l_cells, x0, max_iter,
                                        tol, step_tol, config)
    diag = {"iterations": max(len(history) - 1, 0) if ok else len(history), "history": history}
    if reason:
        diag["reason"] = reason
    return SingularityCandidate(float(x[0]), float(x[1]), float(np.hypot(*f)), ok,
                                candidate.l_cells, candidate.w0, diag)
