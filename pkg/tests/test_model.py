import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ptscatter.model import (
    EvanescentExterior,
    PotentialSpec,
    RegimeMismatch,
    RegimeTag,
    exterior_wavenumber,
    map_to_bessel,
    map_to_mathieu,
    potential_rewritten,
    potential_value,
    regime_classify,
)

finite = dict(allow_nan=False, allow_infinity=False)


def test_potential_examples():
    spec = PotentialSpec(4.0, 0.3, 1)
    assert potential_value(spec, math.pi / 4) == pytest.approx(4 * (0.5 + 0.3j))
    assert potential_value(spec, -1.0) == 4.0
    assert potential_value(spec, 5.0) == 4.0
    assert spec.length == pytest.approx(math.pi)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.1, 20, **finite), st.floats(0, 3, **finite), st.integers(1, 9),
       st.floats(0, 1, **finite))
def test_pt_symmetry(w0, v0, n, t):
    spec = PotentialSpec(w0, v0, n)
    x = t * spec.length
    assert abs(np.conj(potential_value(spec, spec.length - x)) - potential_value(spec, x)) < 1e-12 * w0 * (1 + v0)


@pytest.mark.parametrize("v0", [0.0, 0.2, 0.3, 0.49, 0.5, 0.51, 0.8, 2.0, 5.794])
def test_rewritten_forms_match_potential(v0):
    spec = PotentialSpec(4.0, v0, 3)
    x = np.linspace(0.01, spec.length - 0.01, 101)
    diff = np.max(np.abs(potential_rewritten(spec, x) - potential_value(spec, x)))
    assert diff < 1e-12 * (1 + v0)


def test_regime_classification():
    assert regime_classify(0.3).tag is RegimeTag.SUB_CRITICAL
    assert regime_classify(0.5).tag is RegimeTag.CRITICAL
    assert regime_classify(0.5 + 5e-10).tag is RegimeTag.CRITICAL
    assert regime_classify(0.5 - 1e-8).tag is RegimeTag.SUB_CRITICAL
    assert regime_classify(0.8).tag is RegimeTag.SUPER_CRITICAL
    with pytest.raises(ValueError):
        regime_classify(-0.1)


def test_spec_validation():
    for bad in [(0, 0.3, 1), (-1, 0.3, 1), (4, -0.1, 1), (4, 0.3, 0), (4, 0.3, 1.5)]:
        with pytest.raises(ValueError):
            PotentialSpec(*bad)


def test_exterior_wavenumber():
    spec = PotentialSpec(4.0, 0.3, 1)
    assert exterior_wavenumber(spec, 40.0) == pytest.approx(6.0)
    with pytest.raises(EvanescentExterior):
        exterior_wavenumber(spec, 4.0)


@pytest.mark.parametrize("v0", [0.0, 0.3, 0.8, 1.115, 5.974])
def test_mathieu_map_reproduces_schrodinger(v0):
    # -psi'' + (V - E) psi = 0 and psi_yy + (a - 2q cos 2y) psi = 0 with (dy/dx)^2 = 1
    spec = PotentialSpec(4.0, v0, 2)
    E = 7.3
    m = map_to_mathieu(spec, E)
    x = np.linspace(0.05, spec.length - 0.05, 57)
    lhs = potential_value(spec, x) - E
    rhs = -(m.a - 2 * m.q * np.cos(2 * m.y_of_x(x)))
    assert np.max(np.abs(lhs - rhs)) < 1e-12 * (1 + v0) * 10
    assert m.orientation == (1 if v0 < 0.5 else -1)


def test_bessel_map_reproduces_schrodinger():
    # psi = J(xi(x)) with xi' = i xi turns the Bessel equation into psi'' = (xi^2 - kappa^2) psi
    spec = PotentialSpec(4.0, 0.5, 2)
    E = 5.6
    b = map_to_bessel(spec, E)
    x = np.linspace(0.05, spec.length - 0.05, 57)
    xi = b.xi_of_x(x)
    assert np.max(np.abs((xi**2 - b.kappa**2) - (potential_value(spec, x) - E))) < 1e-12


def test_bessel_map_transparency_index():
    spec = PotentialSpec(4.0, 0.5, 1)
    assert map_to_bessel(spec, 2 + math.pi**2).transparency_index == 1
    assert map_to_bessel(spec, 2 + 4 * math.pi**2).transparency_index == 2
    assert map_to_bessel(spec, 7.0).transparency_index is None
    assert map_to_bessel(spec, 6.0).near_integer   # kappa = 2


def test_regime_mismatch():
    with pytest.raises(RegimeMismatch):
        map_to_mathieu(PotentialSpec(4.0, 0.5, 1), 6.0)
    with pytest.raises(RegimeMismatch):
        map_to_bessel(PotentialSpec(4.0, 0.3, 1), 6.0)
