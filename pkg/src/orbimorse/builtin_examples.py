"""Worked examples: weighted projective spaces, the Kummer orbifold ``[T^4/Z_2]``
and the resolved K3 surface.

Generators return plain JSON-ready documents in the model-file and
critical-data-file formats, so the same fixtures drive both the library and
the CLI.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Sequence

from .critical import CriticalPointData
from .errors import InputError
from .inequalities import ResolutionLevel, resolved_cell_rank

KUMMER_FUNCTION = "cos(2*pi*x1)+cos(2*pi*x2)+cos(2*pi*x3)+cos(2*pi*x4)"

# cos/sin of 2*pi*r at the angles where both are rational
_EXACT_TRIG = {
    Fraction(0): (1, 0),
    Fraction(1, 4): (0, 1),
    Fraction(1, 2): (-1, 0),
    Fraction(3, 4): (0, -1),
}


@dataclass(frozen=True)
class ExampleSpec:
    kind: str
    weights: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in ("wps", "teardrop", "kummer", "k3"):
            raise InputError(f"unknown example {self.kind!r}")
        if self.kind == "wps":
            if not self.weights or any(q < 1 for q in self.weights):
                raise InputError("weights must be positive integers")


def weighted_projective_function(n_points: int) -> str:
    """``f = sum_k k |z_k|^2`` on ``C^n_points`` in real coordinates."""
    terms = []
    for k in range(1, n_points):
        a, b = 2 * k + 1, 2 * k + 2
        sq = f"x{a}^2+x{b}^2"
        terms.append(sq if k == 1 else f"{k}*({sq})")
    return "+".join(terms) if terms else "0"


def builtin_functions() -> dict[str, tuple[str, int]]:
    """Chart functions used by the worked examples, as ``name -> (text, dim)``."""
    return {
        "kummer": (KUMMER_FUNCTION, 4),
        "wps_1_2_3_4": (weighted_projective_function(4), 8),
        "saddle": ("x1^2 - x2^2", 2),
    }


def rotation_block(turns: Fraction) -> list[list]:
    """2x2 rotation by ``2 pi * turns``, exact where possible."""
    r = turns - math.floor(turns)
    if r in _EXACT_TRIG:
        c, s = _EXACT_TRIG[r]
        return [[c, -s], [s, c]]
    th = 2 * math.pi * float(r)
    return [[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]]


def _block_diag(blocks: Sequence[list[list]]) -> list[list]:
    n = sum(len(b) for b in blocks)
    out = [[0] * n for _ in range(n)]
    k = 0
    for b in blocks:
        for i, row in enumerate(b):
            for j, v in enumerate(row):
                out[k + i][k + j] = v
        k += len(b)
    return out


def _standard_j(n: int) -> list[list[int]]:
    return _block_diag([[[0, -1], [1, 0]]] * (n // 2)) if n else []


def _tangent_order(weights: Sequence[int], i: int) -> int:
    q = weights[i]
    order = 1
    for j, w in enumerate(weights):
        if j != i:
            order = math.lcm(order, q // math.gcd(q, w))
    return order


def _jsonable(m):
    return [[str(v) if isinstance(v, Fraction) else v for v in row] for row in m]


def weighted_projective_data(weights: Sequence[int]) -> list[dict]:
    """Critical-data entries for ``f = sum_k k |z_k|^2`` on weighted projective space.

    At ``c_i`` the stabilizer is ``Z_{q_i}``; its generator rotates the
    complex coordinate ``z_j`` by ``2 pi q_j / q_i``.  The index is spanned by
    ``z_j`` for ``j < i`` and the coindex by ``z_j`` for ``j > i``.  When the
    weights share a factor with ``q_i`` the tangent action has a kernel and an
    auxiliary rotation block keeps the stabilizer faithful.
    """
    weights = [int(q) for q in weights]
    ExampleSpec("wps", tuple(weights))
    entries = []
    for i, q in enumerate(weights):
        ind = _block_diag([rotation_block(Fraction(weights[j], q)) for j in range(i)])
        coind = _block_diag([rotation_block(Fraction(weights[j], q)) for j in range(i + 1, len(weights))])
        n = len(ind) + len(coind)
        entry = {
            "location_label": f"c{i}",
            "value": i,
            "stabilizer": {"order": q, "generators": [_jsonable(_block_diag([ind, coind]))]},
            "index_action": [_jsonable(ind)],
            "coindex_action": [_jsonable(coind)],
            "complex_structure": _standard_j(n),
        }
        if _tangent_order(weights, i) < q:
            entry["stabilizer"]["auxiliary"] = [_jsonable(rotation_block(Fraction(1, q)))]
        entries.append(entry)
    return entries


def teardrop_data() -> list[dict]:
    """``P(1, 2)``: a sphere with one cone point of order 2."""
    return weighted_projective_data((1, 2))


def kummer_model() -> dict:
    """Model file for ``[T^4 / Z_2]`` with ``f = sum cos(2 pi x_i)``."""
    minus = [[-1 if i == j else 0 for j in range(4)] for i in range(4)]
    return {
        "dim": 4,
        "lattice": True,
        "generators": [{"linear": minus, "translation": [0, 0, 0, 0]}],
        "function": KUMMER_FUNCTION,
        "complex_structure": _standard_j(4),
        "seeds": {"grid": 4, "random": 0, "rng_seed": 0},
    }


def kummer_critical_data() -> list[dict]:
    """Closed-form critical data of the Kummer function, one entry per half-integer point.

    At ``c_ijkl`` with ``s = i + j + k + l`` halves, the value is ``4 - 2 s``,
    the index is ``(4 - s)`` copies of the sign representation and the
    coindex ``s`` copies.
    """
    entries = []
    for idx in product((0, 1), repeat=4):
        s = sum(idx)
        ind = [[-1 if a == b else 0 for b in range(4 - s)] for a in range(4 - s)]
        coind = [[-1 if a == b else 0 for b in range(s)] for a in range(s)]
        entries.append({
            "location_label": "c" + "".join(map(str, idx)),
            "value": 4 - 2 * s,
            "stabilizer": {"order": 2},
            "index_action": [ind],
            "coindex_action": [coind],
            "complex_structure": _standard_j(4),
        })
    return entries


def k3_resolution_levels(cpd: Sequence[CriticalPointData] | None = None) -> list[ResolutionLevel]:
    """Relative ranks of the sublevel filtration of the resolved Kummer surface.

    Critical points are grouped by critical value (ascending); each point
    contributes the resolved-handle ranks for its index dimension.
    """
    if cpd is None:
        from .formats import load_critical_data
        cpd = load_critical_data(kummer_critical_data())
    by_value: dict[float, dict[int, int]] = {}
    for c in cpd:
        ranks = by_value.setdefault(round(c.value, 9), {})
        for d, r in resolved_cell_rank(c.index).items():
            ranks[d] = ranks.get(d, 0) + r
    return [ResolutionLevel(i, dict(sorted(by_value[v].items()))) for i, v in enumerate(sorted(by_value))]
