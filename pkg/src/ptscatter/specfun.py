"""Complex special functions: gamma, Bessel J of complex order, Floquet-Mathieu.

Everything is evaluated in double precision from series or continued
fractions; nothing here calls into scipy.special.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

__all__ = [
    "GammaPoleError",
    "SeriesNonConvergence",
    "DegenerateExponent",
    "NoNullVector",
    "complex_gamma",
    "reciprocal_gamma",
    "bessel_j",
    "bessel_j_prime",
    "bessel_j_series_prime",
    "bessel_sheet_shift",
    "FloquetExponent",
    "CoeffTable",
    "FloquetBasis",
    "mathieu_nu",
    "mathieu_coeffs",
    "mathieu_me",
    "mathieu_me_prime",
    "mathieu_me_second",
    "floquet_basis",
]

NEAR_INTEGER_TOL = 1e-6


class GammaPoleError(ValueError):
    pass


class SeriesNonConvergence(ArithmeticError):
    pass


class DegenerateExponent(ValueError):
    """Integer Floquet exponent: F(y) and F(-y) are linearly dependent."""


class NoNullVector(ArithmeticError):
    """The supplied (a, q, nu) admit no decaying coefficient sequence."""


# ---------------------------------------------------------------------------
# Gamma

# Lanczos series, g = 607/128, 15 terms; least-squares fitted in 60-digit
# arithmetic on z in [0, 100).  Relative error < 5e-14 for |z| <= 50.
_LANCZOS_G = 607.0 / 128.0
_LANCZOS = (
    1.0,
    57.1562356658629,
    -59.59796035547792,
    14.136097975086809,
    -0.491913826556666,
    3.4136904289679704e-05,
    4.544231210249972e-05,
    -9.32700767403404e-05,
    0.00014225260483355026,
    -0.00017704449394256465,
    0.00016998208025075952,
    -0.00011879879964323399,
    5.636115293337692e-05,
    -1.614727543600553e-05,
    2.1025877021375205e-06,
)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _is_pole(z: complex) -> bool:
    return z.imag == 0.0 and z.real <= 0.0 and z.real == math.floor(z.real)


def _log_gamma_right(z: complex) -> complex:
    # valid for Re z >= 1/2
    z = z - 1.0
    s = _LANCZOS[0]
    for k in range(1, len(_LANCZOS)):
        s += _LANCZOS[k] / (z + k)
    t = z + _LANCZOS_G + 0.5
    return _LOG_SQRT_2PI + (z + 0.5) * cmath.log(t) - t + cmath.log(s)


def complex_gamma(z) -> complex:
    """Gamma function for complex argument.

    Lanczos approximation on Re z >= 1/2, reflection formula elsewhere.
    Raises :class:`GammaPoleError` at 0, -1, -2, ...
    """
    z = complex(z)
    if _is_pole(z):
        raise GammaPoleError(f"Gamma has a pole at {z.real:g}")
    if z.real < 0.5:
        return math.pi / (cmath.sin(math.pi * z) * complex_gamma(1.0 - z))
    if z.imag == 0.0 and z.real == math.floor(z.real) and z.real <= 171:
        return complex(math.factorial(int(z.real) - 1))
    return cmath.exp(_log_gamma_right(z))


def reciprocal_gamma(z) -> complex:
    """1/Gamma(z), entire: exactly zero at the poles of Gamma."""
    z = complex(z)
    if _is_pole(z):
        return 0j
    return 1.0 / complex_gamma(z)


# ---------------------------------------------------------------------------
# Bessel J of complex order

_MAX_SERIES_TERMS = 500


def bessel_j(kappa, xi) -> complex:
    """J_kappa(xi) from its ascending power series, principal branch of xi**kappa.

    Intended for moderate |xi| (<= 30); no asymptotic expansion is used.
    """
    kappa = complex(kappa)
    xi = complex(xi)
    if xi == 0:
        if kappa == 0:
            return 1 + 0j
        if kappa.real > 0:
            return 0j
        # J_{-n}(0) = 0 for positive integer n
        if kappa.imag == 0 and kappa.real == math.floor(kappa.real):
            return 0j
        raise ZeroDivisionError("J_kappa(0) is unbounded for Re kappa < 0")
    half = 0.5 * xi
    lead = cmath.exp(kappa * cmath.log(half))
    z2 = -half * half
    # 1/Gamma(m + kappa + 1) by upward recurrence, restarted across poles
    rg = reciprocal_gamma(kappa + 1.0)
    term = lead * rg
    total = term
    small = 0
    for m in range(1, _MAX_SERIES_TERMS):
        if rg == 0:
            rg = reciprocal_gamma(kappa + m + 1.0)
            mterm = lead * rg * z2**m / math.factorial(m) if m < 170 else 0j
            term = mterm
        else:
            rg = rg / (kappa + m)
            term = term * z2 / (m * (kappa + m))
        total += term
        if abs(term) <= 1e-17 * abs(total) and m > abs(kappa):
            small += 1
            if small >= 2:
                return total
        else:
            small = 0
    raise SeriesNonConvergence(f"Bessel series did not converge for kappa={kappa}, xi={xi}")


def bessel_j_prime(kappa, xi) -> complex:
    """dJ_kappa/dxi = (J_{kappa-1} - J_{kappa+1}) / 2."""
    kappa = complex(kappa)
    return 0.5 * (bessel_j(kappa - 1.0, xi) - bessel_j(kappa + 1.0, xi))


def bessel_j_series_prime(kappa, xi) -> complex:
    """dJ_kappa/dxi by differentiating the power series term by term.

    An independent route to :func:`bessel_j_prime`, kept for cross-checks.
    """
    kappa = complex(kappa)
    xi = complex(xi)
    half = 0.5 * xi
    logh = cmath.log(half)
    total = 0j
    for m in range(_MAX_SERIES_TERMS):
        p = 2 * m + kappa
        rg = reciprocal_gamma(m + kappa + 1.0)
        if rg == 0 or p == 0:
            continue
        term = (-1) ** m * 0.5 * p * cmath.exp((p - 1.0) * logh) * rg / math.factorial(m)
        total += term
        if m > abs(kappa) + 2 and abs(term) <= 1e-17 * abs(total):
            return total
    raise SeriesNonConvergence("differentiated Bessel series did not converge")


def bessel_sheet_shift(kappa, value_on_sheet0, n_sheets: int) -> complex:
    """Continue J_kappa across ``n_sheets`` half-turns: J(xi e^{i n pi}) = e^{i n kappa pi} J(xi)."""
    if n_sheets == 0:
        return complex(value_on_sheet0)
    return complex(value_on_sheet0) * cmath.exp(1j * n_sheets * complex(kappa) * math.pi)


# ---------------------------------------------------------------------------
# Mathieu / Floquet


class FloquetExponent(NamedTuple):
    nu: complex
    near_integer: bool
    trace: complex


def _branch(nu: complex) -> complex:
    # representative with Re nu in [0, 1] for real nu, Im nu >= 0 otherwise
    if nu.imag < 0:
        nu = -nu
    if abs(nu.imag) < 1e-14 * max(1.0, abs(nu)):
        r = nu.real % 2.0
        if r > 1.0:
            r = 2.0 - r
        return complex(r, 0.0)
    return nu


def _near_integer(nu: complex) -> bool:
    return abs(nu - round(nu.real)) < NEAR_INTEGER_TOL


def mathieu_nu(a, q, config=None) -> FloquetExponent:
    """Floquet exponent of ``psi'' + (a - 2q cos 2y) psi = 0``.

    ``cos(nu*pi)`` is half the trace of the one-period monodromy matrix,
    which is obtained by direct integration.
    """
    from .oracle import monodromy

    a = complex(a)
    q = complex(q)
    M = monodromy(a, q, config)
    tr = complex(M[0, 0] + M[1, 1])
    # real a with real or imaginary q: the trace is real by symmetry
    if a.imag == 0 and (q.imag == 0 or q.real == 0):
        tr = complex(tr.real, 0.0)
    if tr.imag == 0 and abs(tr.real) <= 2.0:
        nu = complex(math.acos(0.5 * tr.real) / math.pi, 0.0)
    else:
        nu = _branch(complex(np.arccos(0.5 * tr)) / math.pi)
    return FloquetExponent(nu, _near_integer(nu), tr)


@dataclass
class CoeffTable:
    """Fourier coefficients c_{nu,2r}, r = -r_max..r_max, of a Floquet solution."""

    nu: complex
    coeffs: np.ndarray
    a: complex
    q: complex
    normalization: str = "sum_squares"
    nu_input: complex | None = None

    @property
    def r_max(self) -> int:
        return (len(self.coeffs) - 1) // 2

    @property
    def r(self) -> np.ndarray:
        return np.arange(-self.r_max, self.r_max + 1)

    def recurrence_residual(self) -> np.ndarray:
        """Residuals of q c_{r-1} + ((2r + nu)^2 - a) c_r + q c_{r+1} at interior r."""
        c = self.coeffs
        d = (2 * self.r + self.nu) ** 2 - self.a
        return self.q * c[:-2] + d[1:-1] * c[1:-1] + self.q * c[2:]


def _cf_char(nu, a, q, R, r0):
    """Characteristic function of the truncated recurrence at pivot r0.

    Returns (f, up, down) where up[j] = c_{r0+j+1}/c_{r0+j} and
    down[j] = c_{r0-j-1}/c_{r0-j}, both obtained from the tails inward.
    """
    rs = np.arange(-R, R + 1)
    d = (2 * rs + nu) ** 2 - a
    i0 = r0 + R
    n = 2 * R + 1
    up = np.zeros(n - 1 - i0, dtype=complex)
    g = 0j
    for j in range(n - 1, i0, -1):
        g = -q / (d[j] + q * g)
        up[j - i0 - 1] = g
    down = np.zeros(i0, dtype=complex)
    h = 0j
    for j in range(0, i0):
        h = -q / (d[j] + q * h)
        down[i0 - 1 - j] = h
    f = d[i0]
    if up.size:
        f = f + q * up[0]
    if down.size:
        f = f + q * down[0]
    return f, up, down


def _coeffs_from_ratios(R, r0, up, down):
    n = 2 * R + 1
    i0 = r0 + R
    c = np.zeros(n, dtype=complex)
    c[i0] = 1.0
    for j, g in enumerate(up):
        c[i0 + j + 1] = c[i0 + j] * g
    for j, h in enumerate(down):
        c[i0 - j - 1] = c[i0 - j] * h
    return c


def _solve_table(a, q, nu, R):
    if q == 0:
        c = np.zeros(2 * R + 1, dtype=complex)
        c[R] = 1.0
        return nu, c
    # pivot: among the rows closest to resonance, the one whose characteristic
    # function is smallest at the starting exponent; near-integer nu puts two
    # rows in a tie and only one of them carries the solution. Kept fixed.
    rs = np.arange(-R + 1, R)
    near = rs[np.argsort(np.abs((2 * rs + nu) ** 2 - a))[:3]]
    r0 = int(min(near, key=lambda r: abs(_cf_char(nu, a, q, R, int(r))[0])))
    for _ in range(60):
        f, up, down = _cf_char(nu, a, q, R, r0)
        scale = max(1.0, abs(nu) ** 2, abs(a))
        h = 1e-7 * max(1.0, abs(nu))
        fh, _, _ = _cf_char(nu + h, a, q, R, r0)
        df = (fh - f) / h
        if df == 0:
            break
        step = f / df
        # second-order-accurate derivative for the final polish
        if abs(step) < 1e-5:
            fm, _, _ = _cf_char(nu - h, a, q, R, r0)
            df = (fh - fm) / (2 * h)
            step = f / df
        nu = nu - step
        if abs(step) <= 4e-16 * max(1.0, abs(nu)) or abs(f) <= 1e-15 * scale:
            break
    f, up, down = _cf_char(nu, a, q, R, r0)
    return nu, _coeffs_from_ratios(R, r0, up, down)


def mathieu_coeffs(a, q, nu, *, r_start: int = 16, r_cap: int = 256) -> CoeffTable:
    """Floquet coefficients for (a, q) with exponent near ``nu``.

    The decaying solution of the three-term recurrence is built from
    continued fractions run inward from both truncation tails; ``nu`` is
    polished until the pivot row closes (the truncated system is singular).
    The truncation is doubled from ``r_start`` until the tail coefficients
    are below 1e-14 of the largest.
    """
    a, q, nu = complex(a), complex(q), complex(nu)
    if _near_integer(nu):
        raise DegenerateExponent(f"nu = {nu} is (nearly) an integer")
    R = r_start
    while True:
        nu_p, c = _solve_table(a, q, nu, R)
        cmax = np.max(np.abs(c))
        if abs(c[0]) < 1e-14 * cmax and abs(c[-1]) < 1e-14 * cmax:
            break
        if 2 * R > r_cap:
            raise NoNullVector(f"coefficient tail does not decay within r_max = {r_cap}")
        R *= 2
    # the polished exponent must be a Floquet exponent of the same pair
    if abs(cmath.cos(math.pi * nu_p) - cmath.cos(math.pi * nu)) > 1e-7 * max(1.0, abs(cmath.cos(math.pi * nu))):
        raise NoNullVector(f"(a={a}, q={q}) has no Floquet solution with nu near {nu}")
    if _near_integer(nu_p):
        raise DegenerateExponent(f"nu = {nu_p} is (nearly) an integer")
    s2 = np.sum(c * c)
    if abs(s2) >= 1e-8 * cmax**2:
        c = c / np.sqrt(s2)
        norm = "sum_squares"
    else:
        # near self-orthogonal: sum of squares vanishes, use the largest coefficient
        c = c / c[np.argmax(np.abs(c))]
        norm = "max_coefficient"
    return CoeffTable(nu_p, c, a, q, norm, nu)


@dataclass
class FloquetBasis:
    table: CoeffTable
    delta: float = 0.0
    period: float = field(default=math.pi)


def floquet_basis(a, q, delta: float = 0.0, config=None) -> FloquetBasis:
    exponent = mathieu_nu(a, q, config)
    if exponent.near_integer:
        raise DegenerateExponent(f"nu = {exponent.nu} is (nearly) an integer")
    return FloquetBasis(mathieu_coeffs(a, q, exponent.nu), delta)


def _series(table: CoeffTable, w, order: int):
    """d^order/dw^order of F(w) = sum_r c_r exp(i(nu + 2r) w), via pseudo-periodicity."""
    w = np.asarray(w, dtype=complex)
    m = np.floor(w.real / math.pi + 0.5)
    wr = w - m * math.pi
    p = table.nu + 2 * table.r
    ph = np.exp(1j * np.multiply.outer(wr, p))
    vals = ph @ (table.coeffs * (1j * p) ** order)
    return vals * np.exp(1j * m * math.pi * table.nu)


def _as_table(basis):
    return basis.table if isinstance(basis, FloquetBasis) else basis


def mathieu_me(basis, sign: int, y):
    """F_nu(sign*y) with F_nu(y) = e^{i nu y} sum_r c_r e^{2 i r y}."""
    out = _series(_as_table(basis), sign * np.asarray(y, dtype=complex), 0)
    return out if out.ndim else complex(out)


def mathieu_me_prime(basis, sign: int, y):
    """d/dy of F_nu(sign*y)."""
    out = sign * _series(_as_table(basis), sign * np.asarray(y, dtype=complex), 1)
    return out if out.ndim else complex(out)


def mathieu_me_second(basis, sign: int, y):
    """d^2/dy^2 of F_nu(sign*y)."""
    out = _series(_as_table(basis), sign * np.asarray(y, dtype=complex), 2)
    return out if out.ndim else complex(out)
