from collections import Counter
from math import comb

import numpy as np
import pytest

from orbimorse.critical import (QuotientModel, SeedConfig, assert_morse, canonical_form,
                                find_critical_points, orbit_dedup, seed_points, stabilizer_of)
from orbimorse.errors import DegenerateCriticalPoint, NoSeeds, NotInvariant
from orbimorse.expr import parse
from orbimorse.group_rep import AffineIsometry, ComplexStructure, generate_group, rotation, trivial_group

C3_FUNCTION = "(x1^2+x2^2)^2 - (x1^2+x2^2) + 0.1*(x1^3 - 3*x1*x2^2)"


def c3_model(**seeds):
    G = generate_group([AffineIsometry(rotation(2 * np.pi / 3))])
    return QuotientModel(2, G, parse(C3_FUNCTION, 2), seeds=SeedConfig(**({"grid": 8} | seeds)))


def plain_model(text, dim=1, **seeds):
    return QuotientModel(dim, trivial_group(dim), parse(text, dim), seeds=SeedConfig(**seeds))


def test_kummer_census(kummer_cert):
    pts = kummer_cert.points
    assert len(pts) == 16
    assert all(c.stabilizer.order == 2 for c in pts)
    by_s = Counter()
    for c in pts:
        s = int(round(2 * c.location.sum()))
        assert c.index == 4 - s
        assert c.value == pytest.approx(4 - 2 * s)
        assert c.orientable == (s % 2 == 0)
        assert np.allclose(2 * c.location, np.round(2 * c.location), atol=1e-9)
        by_s[s] += 1
    assert by_s == {s: comb(4, s) for s in range(5)}


def test_kummer_certificate_is_sorted_by_value(kummer_cert):
    vals = [c.value for c in kummer_cert.points]
    assert vals == sorted(vals)
    assert kummer_cert.min_separation == pytest.approx(0.5)
    assert kummer_cert.search.dropped == 0


def test_kummer_index_rep_is_sign_rep(kummer_cert):
    for c in kummer_cert.points:
        g = c.stabilizer.generators[0]
        assert np.allclose(c.index_rep.action[g], -np.eye(c.index))
        assert np.allclose(c.coindex_rep.action[g], -np.eye(c.coindex))


def test_c3_orbit_stabilizer_and_euler():
    model = c3_model()
    search = find_critical_points(model)
    cert = assert_morse(model)
    # orbit-stabilizer: upstairs points = sum of orbit sizes
    assert len(search.points) == sum(model.group.order // c.stabilizer.order for c in cert.points)
    assert len(search.points) == 7
    # Euler characteristic of R^2 from upstairs indices
    euler = sum((model.group.order // c.stabilizer.order) * (-1) ** c.index for c in cert.points)
    assert euler == 1
    origin = [c for c in cert.points if c.stabilizer.order == 3]
    assert len(origin) == 1 and origin[0].index == 2 and origin[0].orientable


def test_c3_orbit_invariants_are_stable_under_seeding():
    a = assert_morse(c3_model())
    b = assert_morse(c3_model(grid=6, random=50, rng_seed=9))
    assert [(round(c.value, 8), c.index, c.stabilizer.order) for c in a.points] == \
           [(round(c.value, 8), c.index, c.stabilizer.order) for c in b.points]


def test_single_quadratic():
    cert = assert_morse(plain_model("x1^2"))
    assert len(cert.points) == 1
    c = cert.points[0]
    assert c.index == 0 and c.value == pytest.approx(0) and abs(c.location[0]) < 1e-8


def test_saddle_index():
    cert = assert_morse(plain_model("x1^2 - x2^2", dim=2))
    assert [c.index for c in cert.points] == [1]


def test_degenerate_point_raises_with_location():
    with pytest.raises(DegenerateCriticalPoint) as info:
        assert_morse(plain_model("x1^3"))
    assert abs(info.value.location[0]) < 1e-3


def test_no_seeds():
    with pytest.raises(NoSeeds):
        seed_points(plain_model("x1^2", grid=0, random=0))


def test_function_must_be_invariant():
    G = generate_group([AffineIsometry([[-1]])])
    with pytest.raises(NotInvariant):
        QuotientModel(1, G, parse("x1", 1))


def test_complex_structure_must_commute():
    G = generate_group([AffineIsometry([[1, 0], [0, -1]])])
    with pytest.raises(Exception):
        QuotientModel(2, G, parse("x1^2+x2^2", 2), ComplexStructure.standard(2))


def test_torus_wrap_and_canonical_form(kummer):
    x = np.array([0.75, 0.1, 0.5, 0.0])
    canon = canonical_form(kummer, x)
    assert np.allclose(canon, [0.25, 0.9, 0.5, 0.0])
    assert kummer.orbit_distance(x, canon[None, :])[0] < 1e-12


def test_orbit_dedup_merges_images(kummer):
    x = np.array([0.1, 0.2, 0.3, 0.4])
    pts = [x, -x, x + 1, np.array([0.3, 0.3, 0.3, 0.3])]
    assert len(orbit_dedup(kummer, pts)) == 2


def test_stabilizer_of_generic_point(kummer):
    assert stabilizer_of(kummer, [0.1, 0.2, 0.3, 0.4]).order == 1
    assert stabilizer_of(kummer, [0.5, 0, 0.5, 0]).order == 2
