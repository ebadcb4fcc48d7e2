import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from planarspeed.errors import DegenerateForcing, ParameterError
from planarspeed.nonlinearity import make_builtin
from planarspeed.quadrature import (
    P_NONZERO,
    P_ZERO_STRICT,
    P_ZERO_TOUCHING,
    effective_speed,
    harmonic_time_g,
    mean_g,
    simpson,
)

import oracles


def test_frozen_oracles_match_adaptive_quadrature():
    assert oracles.adaptive_integral(oracles.shifted_cosine(2, 1), 0, 1) == pytest.approx(
        oracles.MEAN_SHIFTED_COSINE_2_1, abs=1e-13)
    inv = oracles.shifted_cosine(2, 1)
    assert oracles.adaptive_integral(lambda v: 1 / inv(v), 0, 1) == pytest.approx(
        oracles.HARMONIC_SHIFTED_COSINE_2_1, abs=1e-13)
    assert -oracles.harmonic_closed_form(2, 1) == pytest.approx(oracles.HARMONIC_SHIFTED_COSINE_2_1, abs=1e-15)


def test_mean_constant(const):
    assert mean_g(const, 16) == -1.0


def test_mean_shifted_cosine(cosine):
    assert mean_g(cosine, 64) == pytest.approx(oracles.MEAN_SHIFTED_COSINE_2_1, abs=1e-12)


def test_mean_touching(touching):
    assert mean_g(touching, 64) == pytest.approx(oracles.MEAN_TOUCHING_1, abs=1e-12)


def test_harmonic_constant(const):
    assert harmonic_time_g(const) == pytest.approx(-1.0, abs=1e-15)


def test_harmonic_shifted_cosine(cosine):
    assert harmonic_time_g(cosine) == pytest.approx(oracles.HARMONIC_SHIFTED_COSINE_2_1, abs=1e-10)


def test_harmonic_touching_is_degenerate(touching):
    with pytest.raises(DegenerateForcing):
        harmonic_time_g(touching)


def test_too_few_nodes(cosine):
    with pytest.raises(ParameterError):
        mean_g(cosine, 4)


@pytest.mark.parametrize("p, g, value, case", [
    (1.0, ("shifted_cosine", 2, 1), 2.0, P_NONZERO),
    (0.0, ("shifted_cosine", 2, 1), math.sqrt(3), P_ZERO_STRICT),
    (0.0, ("touching", 1), 0.0, P_ZERO_TOUCHING),
    (0.5, ("constant", -1), 1.0, P_NONZERO),
    (0.0, ("constant", -1), 1.0, P_ZERO_STRICT),
])
def test_effective_speed_cases(p, g, value, case):
    c = effective_speed(p, make_builtin(*g))
    assert c.case_tag == case
    assert c.value == pytest.approx(value, abs=1e-10)


def test_touching_speed_is_exactly_zero(touching):
    assert effective_speed(0.0, touching).value == 0.0


def test_negative_slope_norm_rejected(cosine):
    with pytest.raises(ParameterError):
        effective_speed(-1.0, cosine)


@pytest.mark.parametrize("p", [1e-6, 0.1, 0.5, 1.0, 2.0, 100.0])
def test_speed_constant_on_nonzero_slopes(cosine, p):
    assert effective_speed(p, cosine).value == effective_speed(1.0, cosine).value


def test_jump_at_zero_goes_down(cosine):
    jump = effective_speed(1.0, cosine).value - effective_speed(0.0, cosine).value
    assert jump == pytest.approx(2 - math.sqrt(3), abs=1e-10)
    assert jump > 0


@pytest.mark.parametrize("g", [("shifted_cosine", 2, 1), ("shifted_cosine", 3, 2.5), ("touching", 1)])
def test_node_doubling_converged(g):
    g = make_builtin(*g)
    assert abs(mean_g(g, 1024) - mean_g(g, 2048)) < 1e-10
    if g.strictly_negative:
        assert abs(harmonic_time_g(g, 1024) - harmonic_time_g(g, 2048)) < 1e-10


@given(a=st.floats(0.1, 10), frac=st.floats(0, 0.95))
@settings(max_examples=40, deadline=None)
def test_harmonic_speed_never_exceeds_mean_speed(a, frac):
    g = make_builtin("shifted_cosine", a, a * frac)
    c0 = effective_speed(0.0, g).value
    c1 = effective_speed(1.0, g).value
    assert c0 <= c1 * (1 + 1e-12)
    assert c0 == pytest.approx(math.sqrt(a * a - (a * frac) ** 2), rel=1e-8)


def test_simpson_exact_for_cubics():
    assert simpson(lambda x: x ** 3 - x, 0.0, 2.0, 2) == pytest.approx(2.0, abs=1e-14)


def test_simpson_rounds_odd_panels_up():
    f = lambda x: x ** 4
    assert simpson(f, 0.0, 1.0, 3) == simpson(f, 0.0, 1.0, 4)
    with pytest.raises(ParameterError):
        simpson(f, 0.0, 1.0, 1)
