import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qdcsim.theory import (
    DarkPointError,
    OracleParams,
    normalized_fraction_d1,
    quantum_intensities,
    theory_fraction_d1,
    wheeler_intensities,
)

angle = st.floats(-20, 20, allow_nan=False)


def test_wheeler_example():
    i0, i1 = wheeler_intensities(OracleParams(math.pi / 4, math.pi / 3))
    assert i0 == pytest.approx(0.625, abs=1e-15)
    assert i1 == pytest.approx(0.375, abs=1e-15)


def test_quantum_example():
    p = OracleParams(math.pi / 4, 0.0)
    i0, i1 = quantum_intensities(p)
    assert i0 == pytest.approx(0.70164, abs=1e-5)
    assert i1 == pytest.approx(0.125, abs=1e-12)
    assert theory_fraction_d1("quantum", p) == pytest.approx(0.15122, abs=1e-5)


def test_quantum_at_alpha_zero_phi_pi():
    i0, i1 = quantum_intensities(OracleParams(0.0, math.pi))
    assert i0 == pytest.approx(0.0, abs=1e-15)
    assert i1 == pytest.approx(0.5, abs=1e-15)


@given(angle, st.sampled_from([0.0, math.pi / 2]), angle, angle)
def test_quantum_reduces_to_half_wheeler_without_cross_term(phi, alpha, d0, d1):
    p = OracleParams(alpha, phi, d0, d1)
    w0, w1 = wheeler_intensities(p)
    q0, q1 = quantum_intensities(p)
    assert abs(q0 - w0 / 2) <= 1e-12 and abs(q1 - w1 / 2) <= 1e-12
    if w0 + w1 > 0 and q0 + q1 > 0:
        assert abs(theory_fraction_d1("quantum", p) - theory_fraction_d1("wheeler", p)) <= 1e-12


@given(angle, angle)
def test_wheeler_sums_to_one(alpha, phi):
    assert sum(wheeler_intensities(OracleParams(alpha, phi))) == pytest.approx(1.0, abs=1e-15)


@given(angle, angle, st.integers(-3, 3))
def test_periodicity(alpha, phi, k):
    for mode_fn in (wheeler_intensities, quantum_intensities):
        a = mode_fn(OracleParams(alpha, phi))
        b = mode_fn(OracleParams(alpha, phi + 2 * math.pi * k))
        c = mode_fn(OracleParams(alpha + math.pi * k, phi))
        assert a == pytest.approx(b, abs=1e-9)
        assert a == pytest.approx(c, abs=1e-9)


@given(angle, angle)
def test_quantum_intensities_are_physical(alpha, phi):
    i0, i1 = quantum_intensities(OracleParams(alpha, phi))
    assert i0 >= 0 and i1 >= 0
    assert i0 + i1 <= 1 + 1e-12


def test_dark_point_raises():
    with pytest.raises(DarkPointError, match="dark point"):
        normalized_fraction_d1(0.0, 0.0)


def test_non_finite_and_unknown_mode_rejected():
    with pytest.raises(ValueError):
        OracleParams(math.nan, 0.0)
    with pytest.raises(ValueError):
        theory_fraction_d1("classical", OracleParams(0.0, 0.0))
