import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from planarspeed.errors import ParameterError
from planarspeed.nonlinearity import from_dict, from_json, make_builtin, validate

from conftest import BUILTINS


def test_constant_family(const):
    assert const(0.3) == -1.0
    assert const.sup_norm == 1.0
    assert const.strictly_negative and not const.attains_zero


def test_shifted_cosine_values(cosine):
    assert cosine(0.0) == -3.0
    assert cosine(0.5) == -1.0
    assert cosine.sup_norm == 3.0
    assert cosine.lipschitz_const == pytest.approx(2 * math.pi)


def test_touching_values(touching):
    assert touching(0.0) == 0.0
    assert touching(0.5) == -1.0
    assert touching.attains_zero and not touching.strictly_negative


@pytest.mark.parametrize("g, v, expected", [
    (("shifted_cosine", 2, 1), 1.25, -2.0),
    (("constant", -1), 17.9, -1.0),
    (("touching", 1), -0.5, -1.0),
])
def test_eval_examples(g, v, expected):
    assert make_builtin(*g)(v) == expected


@pytest.mark.parametrize("v", [0.0, 0.25, 0.375, 0.5, 0.8125, -3.5])
def test_eval_period_shift_is_bitwise_for_exact_shifts(cosine, v):
    assert cosine(v) == cosine(v + 1.0) == cosine(v - 7.0)


@pytest.mark.parametrize("family, params", BUILTINS)
def test_builtins_nonpositive_and_periodic(family, params):
    g = make_builtin(family, *params)
    rng = np.random.default_rng(7)
    v = rng.uniform(-50, 50, 1000)
    vals = g(v)
    assert np.all(vals <= 0)
    assert np.array_equal(vals, g(np.mod(v, 1.0)))


@given(a=st.floats(0, 10), frac=st.floats(0, 1))
@settings(max_examples=50, deadline=None)
def test_shifted_cosine_extremes_by_grid_search(a, frac):
    b = a * frac
    g = make_builtin("shifted_cosine", a, b)
    vals = g(np.linspace(0, 1, 200001))
    assert vals.max() == pytest.approx(-(a - b), abs=1e-6)
    assert vals.min() == pytest.approx(-(a + b), abs=1e-6)
    assert g.lipschitz_const >= 2 * math.pi * b


@pytest.mark.parametrize("family, params", BUILTINS)
def test_norms_dominate_grid_values(family, params):
    g = make_builtin(family, *params)
    v = np.arange(4096) / 4096
    vals = g(v)
    assert g.sup_norm >= np.abs(vals).max()
    slopes = np.abs(np.diff(np.append(vals, vals[0]))) * 4096
    assert g.lipschitz_const >= slopes.max() - 1e-9
    assert g.lipschitz_norm == g.sup_norm + g.lipschitz_const
    assert g.strictly_negative != g.attains_zero


@pytest.mark.parametrize("family, params, fragment", [
    ("constant", (0.5,), "c <= 0"),
    ("shifted_cosine", (1.0, 2.0), "a >= b"),
    ("shifted_cosine", (1.0, -0.5), "b >= 0"),
    ("touching", (-1.0,), "a >= 0"),
    ("sawtooth", (1.0,), "unknown family"),
])
def test_parameter_domain_rejected(family, params, fragment):
    with pytest.raises(ParameterError, match=fragment):
        make_builtin(family, *params)


def test_validate_passes_for_builtins(cosine):
    rep = validate(cosine, 4096)
    assert rep.ok, rep.to_dict()


def test_validate_flags_positive_sample():
    g = make_builtin("tabulated", [-1.0, -0.5, 0.2, -0.5, -1.0])
    rep = validate(g, 64)
    assert not rep.checks["sign"]
    assert rep.checks["periodicity"]


def test_validate_flags_mismatched_endpoints():
    g = make_builtin("tabulated", [-1.0, -0.5, -0.2, -0.5, -0.7])
    rep = validate(g, 64)
    assert not rep.checks["periodicity"]
    assert rep.checks["sign"]


def test_validate_rejects_tiny_grid(cosine):
    with pytest.raises(ParameterError):
        validate(cosine, 8)


def test_tabulated_interpolates_linearly():
    g = make_builtin("tabulated", [-1.0, -3.0, -1.0])
    assert g(0.25) == -2.0
    assert g(1.75) == -2.0
    assert g.sup_norm == 3.0
    assert g.lipschitz_const == 4.0
    assert g.strictly_negative


def test_tabulated_matches_closed_form_on_nodes(cosine):
    m = 64
    v = np.arange(m + 1) / m
    tab = make_builtin("tabulated", cosine(v))
    assert np.allclose(tab(v[:-1]), cosine(v[:-1]), atol=1e-15)
    assert validate(tab).ok


@pytest.mark.parametrize("desc", [
    {"family": "shifted_cosine", "a": 2.0, "b": 1.0},
    {"family": "constant", "c": -0.5},
    {"family": "touching", "a": 1.0},
    {"family": "tabulated", "samples": [-1.0, -2.0, -1.5, -1.0]},
])
def test_json_round_trip(desc):
    g = from_json(json.dumps(desc))
    assert from_dict(g.to_dict()).to_dict() == g.to_dict()
    assert g.to_dict()["family"] == desc["family"]


def test_json_rejects_unknown_keys():
    with pytest.raises(ParameterError, match="unexpected"):
        from_dict({"family": "touching", "a": 1, "b": 2})
