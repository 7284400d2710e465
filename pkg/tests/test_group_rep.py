from fractions import Fraction
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orbimorse.errors import (ActionNotComplexLinear, LatticeNotPreserved, NotIsometry,
                              OrderExceeded, PhaseNotRational)
from orbimorse.group_rep import (AffineIsometry, ComplexStructure, RealRepresentation, age,
                                 block_diag, centralizer, character_of, conjugacy_classes,
                                 fixed_subspace, generate_group, is_orientation_preserving, rotation,
                                 same_isomorphism_class, to_scalar, trivial_group)


def perm_matrix(p):
    n = len(p)
    m = np.zeros((n, n), dtype=int)
    for i, j in enumerate(p):
        m[j, i] = 1
    return m


def s3():
    return generate_group([AffineIsometry(perm_matrix((1, 0, 2))), AffineIsometry(perm_matrix((1, 2, 0)))])


def cyclic_rotation(q, weights=(1,)):
    mat = block_diag(*[rotation(2 * np.pi * w / q) for w in weights])
    return generate_group([AffineIsometry(mat)])


# -- scalars --------------------------------------------------------------

@pytest.mark.parametrize("raw, expected", [
    ("1/2", Fraction(1, 2)),
    ("-3", Fraction(-3)),
    (2, Fraction(2)),
    (1.0, Fraction(1)),
])
def test_to_scalar_exact(raw, expected):
    assert to_scalar(raw) == expected


def test_to_scalar_keeps_inexact_float():
    assert isinstance(to_scalar(0.3), float)


# -- generation -----------------------------------------------------------

def test_s3_order_and_classes_match_brute_force():
    G = s3()
    assert G.order == 6
    # brute force: conjugacy classes of S3 by cycle type
    brute = {}
    for p in permutations(range(3)):
        fixed = sum(1 for i in range(3) if p[i] == i)
        brute.setdefault(fixed, []).append(p)
    assert sorted(len(c) for c in G.classes) == sorted(len(v) for v in brute.values())
    assert sorted(map(sorted, G.classes)) == sorted(map(sorted, conjugacy_classes(G)))


def test_cayley_table_is_latin_square():
    G = s3()
    for row in G.table:
        assert sorted(row) == list(range(G.order))
    for col in G.table.T:
        assert sorted(col) == list(range(G.order))


def test_centralizer_brute_force():
    G = s3()
    for g in range(G.order):
        brute = {h for h in range(G.order) if G.mul(g, h) == G.mul(h, g)}
        C = centralizer(G, g)
        assert set(C.parent_indices) == brute


def test_rotation_by_fifth_turn_has_order_five():
    G = cyclic_rotation(5)
    assert G.order == 5
    g = G.generators[0]
    # oracle: powers until identity
    k, cur = 1, g
    while cur != 0:
        cur = G.mul(cur, g)
        k += 1
    assert k == 5 == G.element_order(g)
    assert G.is_abelian


def test_trivial_group():
    G = trivial_group(3)
    assert G.order == 1 and G.classes == ((0,),)


def test_order_cap():
    with pytest.raises(OrderExceeded):
        generate_group([AffineIsometry(rotation(2 * np.pi / 50))], max_order=10)


def test_irrational_rotation_exceeds_order():
    with pytest.raises(OrderExceeded):
        generate_group([AffineIsometry(rotation(1.0))], max_order=200)


def test_non_isometry_rejected():
    with pytest.raises(NotIsometry):
        AffineIsometry([[2, 0], [0, 1]])


def test_lattice_must_be_preserved():
    with pytest.raises(LatticeNotPreserved):
        AffineIsometry(rotation(2 * np.pi / 3), lattice=True)


def test_torus_translation_group():
    half = AffineIsometry([[1, 0], [0, 1]], ["1/2", 0], lattice=True)
    G = generate_group([half], lattice=True)
    assert G.order == 2


def test_affine_composition():
    a = AffineIsometry([[0, -1], [1, 0]], [1, 0])
    b = AffineIsometry([[-1, 0], [0, -1]], [0, 2])
    x = np.array([0.3, -0.7])
    assert np.allclose((a @ b).apply(x), a.apply(b.apply(x)))


# -- representations ------------------------------------------------------

def test_character_dimension_formula():
    # dim of fixed space = average of the character
    G = s3()
    rep = RealRepresentation.tangent(G)
    chi = character_of(rep)
    sizes = np.array([len(c) for c in G.classes])
    avg = float(np.dot(sizes, chi) / G.order)
    reynolds = rep.action.mean(axis=0)
    assert round(avg) == 1
    assert np.isclose(np.trace(reynolds), avg)


def test_fixed_subspace_of_transposition():
    G = s3()
    rep = RealRepresentation.tangent(G)
    for g in range(G.order):
        L = G.linear_parts()[g]
        expected = 3 - np.linalg.matrix_rank(L - np.eye(3))
        F = fixed_subspace(rep, g)
        assert F.dim == expected
        assert F.group.order == centralizer(G, g).order


def test_orientation():
    G = s3()
    rep = RealRepresentation.tangent(G)
    assert not is_orientation_preserving(rep)
    assert is_orientation_preserving(RealRepresentation.tangent(cyclic_rotation(3)))


def test_same_isomorphism_class_under_change_of_basis():
    G = cyclic_rotation(6, (1, 2))
    rep = RealRepresentation.tangent(G)
    Q, _ = np.linalg.qr(np.random.default_rng(0).normal(size=(4, 4)))
    conj = RealRepresentation(G, np.einsum("ij,gjk,lk->gil", Q, rep.ambient_action, Q))
    assert same_isomorphism_class(rep, conj)
    assert not same_isomorphism_class(rep, RealRepresentation.tangent(cyclic_rotation(6, (1, 1))))


# -- complex structures and ages -----------------------------------------

def test_complex_structure_validation():
    with pytest.raises(Exception):
        ComplexStructure(np.eye(2))
    J = ComplexStructure.standard(4)
    assert J.dim == 4


@pytest.mark.parametrize("q, weights", [(2, (1, 1)), (3, (1, 2)), (4, (1, 2, 3)), (5, (2,)), (6, (1, 3))])
def test_age_of_rotation_generator(q, weights):
    G = cyclic_rotation(q, weights)
    rep = RealRepresentation.tangent(G)
    J = ComplexStructure.standard(2 * len(weights))
    g = G.generators[0]
    assert age(g, J, rep) == sum(Fraction(w % q, q) for w in weights)
    assert age(0, J, rep) == 0


def test_age_needs_complex_linear_action():
    G = generate_group([AffineIsometry([[1, 0], [0, -1]])])
    rep = RealRepresentation.tangent(G)
    with pytest.raises(ActionNotComplexLinear):
        age(G.generators[0], ComplexStructure.standard(2), rep)


def test_phase_not_rational():
    # a finite group always has rational phases; fake one by bypassing generation
    G = cyclic_rotation(4)
    rep = RealRepresentation.tangent(G)
    bad = rep.ambient_action.copy()
    bad[G.generators[0]] = rotation(1.0)
    bad_rep = RealRepresentation.__new__(RealRepresentation)
    bad_rep.__dict__.update(rep.__dict__)
    bad_rep.ambient_action = bad
    bad_rep.action = bad
    with pytest.raises(PhaseNotRational):
        age(G.generators[0], ComplexStructure.standard(2), bad_rep)


@settings(max_examples=40, deadline=None)
@given(q=st.integers(2, 12), weights=st.lists(st.integers(0, 11), min_size=1, max_size=3))
def test_age_identity(q, weights):
    G = cyclic_rotation(q, weights)
    rep = RealRepresentation.tangent(G)
    J = ComplexStructure.standard(2 * len(weights))
    for g in range(G.order):
        codim = (rep.dim - fixed_subspace(rep, g).dim) // 2
        assert age(g, J, rep) + age(int(G.inverse[g]), J, rep) == codim
