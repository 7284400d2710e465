import json
from fractions import Fraction

import numpy as np
import pytest

from orbimorse.builtin_examples import kummer_critical_data, kummer_model, weighted_projective_data
from orbimorse.formats import (FormatError, critical_data_to_json, load_critical_data, load_model,
                               load_polynomial, read_json)
from orbimorse.morse_poly import inertia_sectors, orbifold_morse_polynomial
from orbimorse.polynomial import ExponentPolynomial as EP


def with_change(doc, **changes):
    out = json.loads(json.dumps(doc))
    out.update(changes)
    return out


def test_model_unknown_key():
    with pytest.raises(FormatError, match="unknown key"):
        load_model(with_change(kummer_model(), colour="red"))


def test_model_error_paths():
    doc = kummer_model()
    doc["generators"][0]["linear"][0][0] = 2
    with pytest.raises(FormatError, match=r"generators\[0\]"):
        load_model(doc)
    with pytest.raises(FormatError, match="function"):
        load_model(with_change(kummer_model(), function="cos(2*pi*x5)"))
    with pytest.raises(FormatError, match="seeds"):
        load_model(with_change(kummer_model(), seeds={"grid": 2, "walk": 1}))
    with pytest.raises(FormatError, match="tolerances"):
        load_model(with_change(kummer_model(), tolerances={"newton": 1}))


def test_model_rational_strings():
    doc = {"dim": 2, "generators": [{"linear": [["0", "-1"], ["1", "0"]]}], "function": "x1^2+x2^2"}
    model = load_model(doc)
    assert model.group.order == 4
    assert model.group.elements[model.group.generators[0]].exact


def test_json_decode_error_has_line_and_column(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "dim": 2,\n  "function": \n}')
    with pytest.raises(FormatError, match=r"line 4 column 1"):
        read_json(p)


def test_critical_data_errors():
    doc = weighted_projective_data((1, 2))
    doc[1]["stabilizer"]["order"] = 3
    with pytest.raises(FormatError, match=r"\[1\]"):
        load_critical_data(doc)
    doc = weighted_projective_data((1, 2))
    doc[1]["stabilizer"]["generators"][0][0][0] = 1
    with pytest.raises(FormatError, match="does not match"):
        load_critical_data(doc)
    with pytest.raises(FormatError, match="unknown key"):
        load_critical_data([with_change(weighted_projective_data((1, 2))[0], extra=1)])
    with pytest.raises(FormatError, match="array"):
        load_critical_data({"entries": []})


def test_critical_data_roundtrip_closed_form():
    cpd = load_critical_data(kummer_critical_data())
    again = load_critical_data(critical_data_to_json(cpd))
    assert [(c.label, c.value, c.index, c.stabilizer.order) for c in again] == \
           [(c.label, c.value, c.index, c.stabilizer.order) for c in cpd]


def test_critical_data_roundtrip_from_analysis(kummer_cert):
    doc = critical_data_to_json(kummer_cert.points)
    assert all(isinstance(v, int) for e in doc for m in e["index_action"] for row in m for v in row)
    again = load_critical_data(json.loads(json.dumps(doc)))
    assert orbifold_morse_polynomial(inertia_sectors(again)) == \
           orbifold_morse_polynomial(inertia_sectors(kummer_cert.points))
    assert np.allclose(again[5].location, kummer_cert.points[5].location)


def test_roundtrip_keeps_auxiliary_blocks():
    cpd = load_critical_data(weighted_projective_data((2, 4, 6)))
    doc = critical_data_to_json(cpd)
    assert "auxiliary" in doc[0]["stabilizer"]
    again = load_critical_data(doc)
    assert [c.stabilizer.order for c in again] == [2, 4, 6]


@pytest.mark.parametrize("raw", [
    "1 + 22*t^2 + t^4",
    {"0": 1, "2": 22, "4": 1},
    {"kind": "orbifold", "polynomial": {"0": 1, "2": 22, "4": 1}, "text": "1 + 22*t^2 + t^4"},
])
def test_load_polynomial(raw):
    assert load_polynomial(raw) == EP({0: 1, 2: 22, 4: 1})


def test_load_polynomial_file(tmp_path):
    p = tmp_path / "m.txt"
    p.write_text("1 + t^(1/2)\n")
    assert load_polynomial(p) == EP({0: 1, Fraction(1, 2): 1})
    with pytest.raises(FormatError):
        load_polynomial(tmp_path / "missing.json")
