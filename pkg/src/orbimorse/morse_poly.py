"""Inertia sectors of critical-point data and the three Morse polynomials."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .critical import CriticalPointData
from .errors import InputError, MissingComplexStructure
from .group_rep import ComplexStructure, age, fixed_subspace, is_orientation_preserving
from .polynomial import ExponentPolynomial


@dataclass(frozen=True)
class InertiaSectorDatum:
    """A pair ``(c, (g))``: critical point ``c`` and a conjugacy class of its stabilizer."""

    base: CriticalPointData
    class_rep: int
    class_size: int
    centralizer_order: int
    ind_fixed_dim: int
    coind_fixed_dim: int
    age: Fraction | None
    orientable_pair: bool

    @property
    def twisted(self) -> bool:
        return self.class_rep != 0

    @property
    def label(self) -> str:
        return f"{self.base.label}^{self.class_rep}"

    def shifted_degree(self) -> Fraction:
        if self.age is None:
            raise MissingComplexStructure(f"sector {self.label} has no age")
        return self.ind_fixed_dim + 2 * self.age


def _structure_for(c: CriticalPointData, J: ComplexStructure | None):
    if J is not None and J.dim == c.tangent_rep.ambient_dim:
        return J
    if J is not None and c.complex_structure is None:
        raise InputError(f"{c.label}: complex structure of dimension {J.dim} does not fit "
                         f"the {c.tangent_rep.ambient_dim}-dimensional tangent space")
    return c.complex_structure


def inertia_sectors(cpd: Sequence[CriticalPointData],
                    J: ComplexStructure | None = None) -> list[InertiaSectorDatum]:
    """One datum per critical point and conjugacy class of its stabilizer.

    Ages are computed from ``J`` (or each point's own complex structure) on the
    full tangent representation; without either, ``age`` is ``None``.
    """
    out = []
    for c in cpd:
        Jc = _structure_for(c, J)
        G = c.stabilizer
        for cls in G.classes:
            g = cls[0]
            ind_g = fixed_subspace(c.index_rep, g)
            coind_g = fixed_subspace(c.coindex_rep, g)
            a = age(g, Jc, c.tangent_rep) if Jc is not None else None
            out.append(InertiaSectorDatum(
                base=c, class_rep=g, class_size=len(cls),
                centralizer_order=ind_g.group.order,
                ind_fixed_dim=ind_g.dim, coind_fixed_dim=coind_g.dim, age=a,
                orientable_pair=is_orientation_preserving(ind_g)))
    return out


def morse_polynomial(cpd: Sequence[CriticalPointData]) -> ExponentPolynomial:
    """Sum of ``t^dim(ind)`` over orientable critical points."""
    terms: dict[int, int] = {}
    for c in cpd:
        if c.orientable:
            terms[c.index] = terms.get(c.index, 0) + 1
    return ExponentPolynomial(terms)


def inertia_morse_polynomial(sectors: Sequence[InertiaSectorDatum]) -> ExponentPolynomial:
    """Sum of ``t^dim(ind^g)`` over orientable pairs."""
    terms: dict[int, int] = {}
    for s in sectors:
        if s.orientable_pair:
            terms[s.ind_fixed_dim] = terms.get(s.ind_fixed_dim, 0) + 1
    return ExponentPolynomial(terms)


def orbifold_morse_polynomial(sectors: Sequence[InertiaSectorDatum]) -> ExponentPolynomial:
    """Sum of ``t^(dim(ind^g) + 2 age)`` over orientable pairs."""
    terms: dict[Fraction, int] = {}
    for s in sectors:
        if s.age is None:
            raise MissingComplexStructure(
                f"sector {s.label} has no age; declare a complex structure")
        if s.orientable_pair:
            e = s.shifted_degree()
            terms[e] = terms.get(e, 0) + 1
    return ExponentPolynomial(terms)


def representability_certificate(cpd: Sequence[CriticalPointData]) -> bool:
    """True iff every critical point has trivial automorphism group.

    Meaningful only for functions with compact sublevel sets, which the caller
    asserts.
    """
    return all(c.stabilizer.order == 1 for c in cpd)


def non_orientable_sectors(sectors: Sequence[InertiaSectorDatum]) -> list[InertiaSectorDatum]:
    return [s for s in sectors if not s.orientable_pair]
