"""Morse inequalities ``M = P + (1 + t) R`` in exact integer arithmetic.

Rational exponents are handled class by class: ``(1 + t)`` only links
exponents that differ by 1, so each residue class mod 1 is divided on its own.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import InputError, NotLacunary, OddDegreePresent, RationalExponents
from .polynomial import ExponentPolynomial


@dataclass(frozen=True)
class InequalityReport:
    morse: ExponentPolynomial
    poincare: ExponentPolynomial
    remainder: ExponentPolynomial | None
    consistent: bool
    euler_check: bool
    quotient: dict = field(default_factory=dict)  # signed quotient (M - P) / (1 + t), when exact

    def to_json(self) -> dict:
        return {
            "morse": self.morse.to_json(),
            "poincare": self.poincare.to_json(),
            "remainder": None if self.remainder is None else self.remainder.to_json(),
            "consistent": self.consistent,
            "euler_check": self.euler_check,
        }


def divide_by_one_plus_t(D: dict) -> tuple[dict, bool]:
    """Synthetic division of a signed polynomial by ``1 + t``.

    Returns the quotient and whether the division was exact.
    """
    D = {e: c for e, c in D.items() if c}
    if not D:
        return {}, True
    # scale exponents to integers; the residue class of e mod 1 becomes E mod L
    L = math.lcm(*(Fraction(e).denominator for e in D))
    classes: dict[int, dict[int, int]] = {}
    for e, c in D.items():
        E = int(e * L)
        classes.setdefault(E % L, {})[E // L] = c
    quotient: dict = {}
    exact = True
    for r, coefs in classes.items():
        lo, hi = min(coefs), max(coefs)
        prev = 0
        for k in range(lo, hi + 1):
            q = coefs.get(k, 0) - prev
            if k == hi:
                exact &= q == 0
            elif q:
                quotient[k if r == 0 else k + Fraction(r, L)] = q
            prev = q
    return quotient, exact


def check_inequality(M: ExponentPolynomial, P: ExponentPolynomial) -> InequalityReport:
    """Decide whether ``M - P = (1 + t) R`` with ``R`` having non-negative integer coefficients."""
    D: dict[Fraction, int] = dict(M.items())
    for e, c in P.items():
        D[e] = D.get(e, 0) - c
    quotient, exact = divide_by_one_plus_t(D)
    # exactness of the division is the per-class alternating-sum (Euler) identity
    euler = exact
    if M.is_integral and P.is_integral:
        euler = M.at_minus_one() == P.at_minus_one()
    consistent = exact and all(c >= 0 for c in quotient.values())
    remainder = ExponentPolynomial(quotient) if consistent else None
    return InequalityReport(M, P, remainder, consistent, euler, quotient if exact else {})


def alternating_sums_dominated(M: ExponentPolynomial, P: ExponentPolynomial) -> bool:
    """``sum_{i<=k} (-1)^(k-i) P_i <= sum_{i<=k} (-1)^(k-i) M_i`` for every ``k`` (integral exponents)."""
    if not (M.is_integral and P.is_integral):
        raise RationalExponents("alternating sums need integral exponents")
    top = int(max([M.degree or 0, P.degree or 0]))
    sm = sp = 0
    for k in range(top + 1):
        sm = M.coef(k) - sm
        sp = P.coef(k) - sp
        if sp > sm:
            return False
    return True


def is_lacunary(M: ExponentPolynomial) -> bool:
    """No two exponents differing by exactly 1."""
    exps = set(M)
    return not any(e + 1 in exps for e in exps)


def betti_from_lacunary(M: ExponentPolynomial) -> tuple[int, ...]:
    """Graded dimensions ``(b_0, b_1, ..., b_top)`` read off a lacunary Morse polynomial."""
    if not is_lacunary(M):
        raise NotLacunary(f"{M.render()} has consecutive powers of t")
    if not M.is_integral:
        raise RationalExponents(f"{M.render()} has non-integral exponents; "
                                "use the polynomial itself as the graded dimension")
    if not M:
        return ()
    return tuple(M.coef(i) for i in range(int(M.degree) + 1))


# ---------------------------------------------------------------------------
# relative cells and the resolved K3 computation
# ---------------------------------------------------------------------------

def cell_rank(ind_dim: int, orientable: bool) -> dict[int, int]:
    """Rank of the relative homology of a handle: one class in degree ``ind_dim`` if orientable."""
    if ind_dim < 0:
        raise InputError("index dimension must be non-negative")
    return {ind_dim: 1} if orientable else {}


def resolved_cell_rank(v_dim: int) -> dict[int, int]:
    """Free ranks of a handle pulled back to ``T*CP^1``: degree 2, plus degree ``v_dim`` if even."""
    if not 0 <= v_dim <= 4:
        raise InputError("v_dim must lie in 0..4 for a real subspace of C^2")
    ranks = {2: 1}
    if v_dim % 2 == 0:
        ranks[v_dim] = ranks.get(v_dim, 0) + 1
    return ranks


@dataclass(frozen=True)
class ResolutionLevel:
    level: int
    relative_ranks: dict[int, int]


def assemble_even_ranks(levels: Sequence[ResolutionLevel]) -> tuple[int, ...]:
    """Degreewise sum of relative ranks.

    Valid only when every level is concentrated in even degrees: then all
    connecting maps of the long exact sequences vanish and ranks add.
    """
    total: dict[int, int] = {}
    for lev in levels:
        for deg, r in lev.relative_ranks.items():
            if r < 0:
                raise InputError(f"negative rank at level {lev.level}")
            if r and deg % 2:
                raise OddDegreePresent(f"level {lev.level} has rank {r} in odd degree {deg}")
            total[deg] = total.get(deg, 0) + r
    total = {d: r for d, r in total.items() if r}
    if not total:
        return ()
    return tuple(total.get(d, 0) for d in range(max(total) + 1))
