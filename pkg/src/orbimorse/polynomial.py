"""Polynomials in ``t`` with non-negative integer coefficients and rational exponents."""
from __future__ import annotations

import re
from collections.abc import Mapping
from fractions import Fraction
from typing import Iterator

from .errors import InputError


def _exp(e) -> Fraction | int:
    """Normalized exponent: ``int`` when integral (cheap to hash), else ``Fraction``."""
    if type(e) is int:
        if e < 0:
            raise InputError(f"negative exponent {e!r}")
        return e
    try:
        q = Fraction(e) if not isinstance(e, float) else Fraction(e).limit_denominator(10**6)
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"bad exponent {e!r}") from exc
    if q < 0:
        raise InputError(f"negative exponent {e!r}")
    return q.numerator if q.denominator == 1 else q


class ExponentPolynomial(Mapping):
    """Immutable ``{exponent: coefficient}`` with only strictly positive coefficients."""

    __slots__ = ("_terms",)

    def __init__(self, terms=None):
        acc: dict[Fraction, int] = {}
        items = terms.items() if isinstance(terms, Mapping) else (terms or ())
        for e, c in items:
            if isinstance(c, bool) or not isinstance(c, int):
                if isinstance(c, Fraction) and c.denominator == 1:
                    c = int(c)
                else:
                    raise InputError(f"coefficient {c!r} is not an integer")
            if c < 0:
                raise InputError(f"negative coefficient {c} at exponent {e}")
            q = _exp(e)
            acc[q] = acc.get(q, 0) + c
        self._terms = {e: acc[e] for e in sorted(acc) if acc[e] != 0}

    @classmethod
    def monomial(cls, e, c: int = 1) -> "ExponentPolynomial":
        return cls({e: c})

    @classmethod
    def zero(cls) -> "ExponentPolynomial":
        return cls()

    def __getitem__(self, e) -> int:
        return self._terms[Fraction(e)]

    def coef(self, e) -> int:
        return self._terms.get(Fraction(e), 0)

    def __iter__(self) -> Iterator[Fraction]:
        return iter(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __eq__(self, other):
        if isinstance(other, ExponentPolynomial):
            return self._terms == other._terms
        if isinstance(other, Mapping):
            try:
                return self == ExponentPolynomial(other)
            except InputError:
                return False
        return NotImplemented

    def __hash__(self):
        return hash(tuple(self._terms.items()))

    def __add__(self, other: "ExponentPolynomial") -> "ExponentPolynomial":
        out = dict(self._terms)
        for e, c in other.items():
            out[e] = out.get(e, 0) + c
        return ExponentPolynomial(out)

    def times_one_plus_t(self) -> "ExponentPolynomial":
        out: dict[Fraction, int] = {}
        for e, c in self._terms.items():
            out[e] = out.get(e, 0) + c
            out[e + 1] = out.get(e + 1, 0) + c
        return ExponentPolynomial(out)

    def shift(self, d) -> "ExponentPolynomial":
        return ExponentPolynomial({e + Fraction(d): c for e, c in self._terms.items()})

    @property
    def is_integral(self) -> bool:
        return all(e.denominator == 1 for e in self._terms)

    @property
    def degree(self) -> Fraction | None:
        return max(self._terms) if self._terms else None

    def total(self) -> int:
        return sum(self._terms.values())

    def at_minus_one(self) -> int:
        """Exact value at ``t = -1`` (integral exponents only)."""
        if not self.is_integral:
            raise InputError("value at -1 needs integral exponents")
        return sum(c * (-1) ** int(e) for e, c in self._terms.items())

    def to_json(self) -> dict[str, int]:
        return {str(e): c for e, c in self._terms.items()}

    @classmethod
    def from_json(cls, data) -> "ExponentPolynomial":
        if not isinstance(data, Mapping):
            raise InputError("polynomial must be a JSON object {exponent: coefficient}")
        return cls({_exp(str(k)): v for k, v in data.items()})

    def render(self) -> str:
        """Human form, ascending exponents: ``1 + 22*t^2 + t^4``, ``t^(1/2)``."""
        if not self._terms:
            return "0"
        parts = []
        for e, c in self._terms.items():
            if e == 0:
                parts.append(str(c))
                continue
            if e == 1:
                mono = "t"
            elif e.denominator == 1:
                mono = f"t^{e.numerator}"
            else:
                mono = f"t^({e})"
            parts.append(mono if c == 1 else f"{c}*{mono}")
        return " + ".join(parts)

    def __str__(self):
        return self.render()

    def __repr__(self):
        return f"ExponentPolynomial({self.render()!r})"

    @classmethod
    def parse(cls, text: str) -> "ExponentPolynomial":
        """Inverse of :meth:`render`."""
        text = text.strip()
        if text == "0":
            return cls()
        terms: dict[Fraction, int] = {}
        term = re.compile(r"^(?:(\d+)\*?)?(?:t(?:\^(?:(\d+)|\((\d+(?:/\d+)?)\)))?)?$")
        for raw in text.split("+"):
            raw = raw.replace(" ", "")
            m = term.match(raw)
            if not raw or m is None or (m.group(1) is None and "t" not in raw):
                raise InputError(f"cannot parse polynomial term {raw!r}")
            c = int(m.group(1)) if m.group(1) else 1
            if "t" not in raw:
                e = Fraction(0)
            else:
                try:
                    e = Fraction(m.group(2) or m.group(3) or 1)
                except ZeroDivisionError:
                    raise InputError(f"zero denominator in {raw!r}") from None
            terms[e] = terms.get(e, 0) + c
        return cls(terms)
