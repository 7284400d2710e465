from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orbimorse.builtin_examples import (ExampleSpec, kummer_critical_data, kummer_model, rotation_block,
                                        teardrop_data, weighted_projective_data)
from orbimorse.errors import InputError
from orbimorse.formats import load_critical_data, load_model
from orbimorse.inequalities import betti_from_lacunary, is_lacunary
from orbimorse.morse_poly import morse_polynomial

weights = st.lists(st.integers(1, 12), min_size=1, max_size=6)


@settings(max_examples=60, deadline=None)
@given(weights)
def test_wps_morse_polynomial_is_lacunary(w):
    cpd = load_critical_data(weighted_projective_data(w))
    M = morse_polynomial(cpd)
    n = len(w) - 1
    assert M == {2 * i: 1 for i in range(n + 1)}
    assert is_lacunary(M)
    assert betti_from_lacunary(M) == tuple(1 - k % 2 for k in range(2 * n + 1))
    assert [c.stabilizer.order for c in cpd] == list(w)
    assert [c.value for c in cpd] == list(range(n + 1))


@pytest.mark.parametrize("w", [(1, 1), (1, 2), (1, 2, 3)])
def test_wps_small(w):
    cpd = load_critical_data(weighted_projective_data(w))
    assert [c.index for c in cpd] == [2 * i for i in range(len(w))]


def test_teardrop_is_wps_1_2():
    assert teardrop_data() == weighted_projective_data((1, 2))


def test_kummer_model_loads():
    model = load_model(kummer_model())
    assert model.dim == 4 and model.lattice and model.group.order == 2
    assert model.function.values(np.zeros((1, 4)))[0] == pytest.approx(4)


def test_kummer_closed_form_data():
    cpd = load_critical_data(kummer_critical_data())
    assert len(cpd) == 16
    for s in range(5):
        assert sum(1 for c in cpd if c.index == 4 - s and c.value == 4 - 2 * s) == comb(4, s)


@pytest.mark.parametrize("turns, exact", [(0, True), (0.25, True), (0.5, True), (0.2, False)])
def test_rotation_block(turns, exact):
    from fractions import Fraction
    m = np.array(rotation_block(Fraction(turns)), dtype=float)
    assert np.allclose(m @ m.T, np.eye(2))
    assert np.isclose(np.arctan2(m[1, 0], m[0, 0]) % (2 * np.pi), 2 * np.pi * float(turns))
    assert all(isinstance(v, int) for row in rotation_block(Fraction(turns)) for v in row) is exact


@pytest.mark.parametrize("kind, w", [("wps", ()), ("wps", (0, 1)), ("circle", ())])
def test_example_spec_validation(kind, w):
    with pytest.raises(InputError):
        ExampleSpec(kind, w)
