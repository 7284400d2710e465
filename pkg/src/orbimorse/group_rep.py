"""Finite groups of affine isometries and their real representations.

A chart of a global quotient is ``R^n`` (or the torus ``R^n / Z^n`` when a
lattice is declared) acted on by a finite group of maps ``x -> L x + t``.
Groups are generated by closure from a few generators; elements are indexed
with the identity at 0 and a full Cayley table is kept, which is cheap at the
orders this package deals with.

Representations are stored concretely: each group element acts on an ambient
space ``V = R^n`` by an orthogonal matrix, and a representation is an
invariant subspace ``W`` of ``V`` given by an orthonormal basis.  This lets the
same machinery serve tangent spaces of chart points and directly entered
critical-point data, where the acting matrices need not be faithful.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    ActionNotComplexLinear,
    InputError,
    LatticeNotPreserved,
    NotIsometry,
    OrderExceeded,
    PhaseNotRational,
)

ELEMENT_TOL = 1e-9
CHARACTER_TOL = 1e-6
PHASE_TOL = 1e-6
DEFAULT_MAX_ORDER = 10_000


# ---------------------------------------------------------------------------
# scalar helpers
# ---------------------------------------------------------------------------

def to_scalar(value):
    """Convert a file/user scalar to ``Fraction`` when exact, else ``float``.

    Strings ``"p/q"`` and ints are exact.  Floats stay floats unless integral.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise InputError(f"boolean is not a matrix entry: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"bad rational literal {value!r}") from exc
    if isinstance(value, float):
        if not math.isfinite(value):
            raise InputError(f"non-finite matrix entry {value!r}")
        return Fraction(value) if value.is_integer() else value
    raise InputError(f"unsupported scalar {value!r}")


def _as_array(rows, shape=None) -> np.ndarray:
    """Build an object array of Fractions if every entry is exact, else float64."""
    arr = np.asarray(rows, dtype=object)
    flat = [to_scalar(v) for v in arr.ravel()]
    if all(isinstance(v, Fraction) for v in flat):
        out = np.empty(len(flat), dtype=object)
        out[:] = flat
    else:
        out = np.array([float(v) for v in flat], dtype=float)
    out = out.reshape(arr.shape)
    if shape is not None and out.shape != shape:
        raise InputError(f"expected shape {shape}, got {out.shape}")
    return out


def _is_exact(arr: np.ndarray) -> bool:
    return arr.dtype == object


def _kept(arr) -> bool:
    return isinstance(arr, np.ndarray) and arr.dtype in (np.float64, np.dtype(object))


def _frac_mod1(x: Fraction) -> Fraction:
    return x - math.floor(x)


def _wrap_float(t: np.ndarray) -> np.ndarray:
    t = np.mod(t, 1.0)
    t[t > 1.0 - ELEMENT_TOL] = 0.0
    return t


def format_scalar(v) -> str | float:
    """Inverse of :func:`to_scalar` for serialization."""
    if isinstance(v, Fraction):
        return str(v)
    return float(v)


# ---------------------------------------------------------------------------
# affine isometries
# ---------------------------------------------------------------------------

class AffineIsometry:
    """The map ``x -> linear @ x + translation``, optionally modulo ``Z^n``.

    Entries are kept as exact ``Fraction`` objects when every entry of the
    matrix (resp. translation) is rational, otherwise as floats.
    """

    __slots__ = ("linear", "translation", "lattice")

    def __init__(self, linear, translation=None, lattice: bool = False, check: bool = True):
        lin = linear if _kept(linear) else _as_array(linear)
        if lin.size == 0:
            lin = lin.reshape(0, 0)
        if lin.ndim != 2 or lin.shape[0] != lin.shape[1]:
            raise InputError(f"linear part must be square, got shape {lin.shape}")
        n = lin.shape[0]
        if translation is None:
            tr = np.empty(n, dtype=object)
            tr[:] = [Fraction(0)] * n
        else:
            tr = translation if _kept(translation) else _as_array(translation)
        if tr.shape != (n,):
            raise InputError(f"translation must have length {n}")
        if lattice:
            if _is_exact(tr):
                t2 = np.empty(n, dtype=object)
                t2[:] = [_frac_mod1(v) for v in tr]
                tr = t2
            else:
                tr = _wrap_float(tr.astype(float))
        self.linear = lin
        self.translation = tr
        self.lattice = lattice
        if check:
            self._validate()

    def _validate(self):
        n = self.dim
        if _is_exact(self.linear):
            prod = self.linear.T.dot(self.linear)
            if any(prod[i, j] != (1 if i == j else 0) for i in range(n) for j in range(n)):
                raise NotIsometry("linear part is not orthogonal")
        else:
            L = self.linear
            if np.max(np.abs(L.T @ L - np.eye(n)), initial=0.0) > ELEMENT_TOL * 10:
                raise NotIsometry("linear part is not orthogonal within tolerance")
        if self.lattice:
            L = self.matrix
            if np.max(np.abs(L - np.round(L)), initial=0.0) > ELEMENT_TOL:
                raise LatticeNotPreserved("linear part is not an integer matrix")

    @property
    def dim(self) -> int:
        return self.linear.shape[0]

    @property
    def exact(self) -> bool:
        return _is_exact(self.linear) and _is_exact(self.translation)

    @property
    def matrix(self) -> np.ndarray:
        return self.linear.astype(float)

    @property
    def shift(self) -> np.ndarray:
        return self.translation.astype(float)

    def __matmul__(self, other: "AffineIsometry") -> "AffineIsometry":
        # (A, a) o (B, b) = (AB, Ab + a)
        if _is_exact(self.linear) and _is_exact(other.linear):
            lin = self.linear.dot(other.linear)
        else:
            lin = self.matrix @ other.matrix
        if _is_exact(self.linear) and _is_exact(other.translation) and _is_exact(self.translation):
            tr = self.linear.dot(other.translation) + self.translation
        else:
            tr = self.matrix @ other.shift + self.shift
        return AffineIsometry(lin, tr, lattice=self.lattice or other.lattice, check=False)

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Apply to points ``x`` of shape ``(n,)`` or ``(m, n)`` (no wrapping)."""
        x = np.asarray(x, dtype=float)
        return x @ self.matrix.T + self.shift

    def distance(self, other: "AffineIsometry") -> float:
        d_lin = np.max(np.abs(self.matrix - other.matrix), initial=0.0)
        dt = self.shift - other.shift
        if self.lattice:
            dt = dt - np.round(dt)
        return max(d_lin, float(np.max(np.abs(dt), initial=0.0)))

    def equals(self, other: "AffineIsometry") -> bool:
        if self.exact and other.exact:
            return (all(a == b for a, b in zip(self.linear.ravel(), other.linear.ravel()))
                    and all(a == b for a, b in zip(self.translation, other.translation)))
        return self.distance(other) <= ELEMENT_TOL

    def key(self):
        if self.exact:
            return ("q",) + tuple(self.linear.ravel()) + tuple(self.translation)
        return None

    def float_vector(self) -> np.ndarray:
        t = self.shift
        if self.lattice:
            t = _wrap_float(t.copy())
        return np.concatenate([self.matrix.ravel(), t])

    def to_json(self) -> dict:
        return {
            "linear": [[format_scalar(v) for v in row] for row in self.linear],
            "translation": [format_scalar(v) for v in self.translation],
        }

    def __repr__(self):
        return f"AffineIsometry(linear={self.matrix.tolist()}, translation={self.shift.tolist()})"

    @classmethod
    def identity(cls, n: int, lattice: bool = False) -> "AffineIsometry":
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)], lattice=lattice)


class _ElementIndex:
    """Lookup of group elements: exact hashing, or rounded keys + tolerance scan."""

    def __init__(self):
        self.exact = {}
        self.rounded = {}
        self.vectors = []
        self.lattice_mask = None

    def _rkey(self, v):
        return tuple(np.round(v, 6) + 0.0)

    def find(self, g: AffineIsometry):
        k = g.key()
        if k is not None and k in self.exact:
            return self.exact[k]
        v = g.float_vector()
        hit = self.rounded.get(self._rkey(v))
        if hit is not None:
            return hit
        if not self.vectors:
            return None
        stack = np.asarray(self.vectors)
        n = g.dim
        diff = stack - v
        if g.lattice:
            diff[:, n * n:] -= np.round(diff[:, n * n:])
        err = np.max(np.abs(diff), axis=1)
        i = int(np.argmin(err))
        return i if err[i] <= ELEMENT_TOL else None

    def add(self, g: AffineIsometry, idx: int):
        k = g.key()
        if k is not None:
            self.exact[k] = idx
        v = g.float_vector()
        self.rounded[self._rkey(v)] = idx
        self.vectors.append(v)


# ---------------------------------------------------------------------------
# finite groups
# ---------------------------------------------------------------------------

class FiniteActionGroup:
    """A finite group of affine isometries with its Cayley table.

    ``table[i, j]`` is the index of ``elements[i] @ elements[j]``; index 0 is
    the identity.  Subgroups remember the indices of their elements in the
    parent through ``parent_indices``.
    """

    def __init__(self, elements: Sequence[AffineIsometry], table: np.ndarray,
                 generators: Sequence[int], lattice: bool = False,
                 parent_indices: np.ndarray | None = None):
        self.elements = tuple(elements)
        self.table = np.asarray(table, dtype=np.int64)
        self.generators = tuple(int(g) for g in generators)
        self.lattice = lattice
        n = len(self.elements)
        self.parent_indices = (np.arange(n) if parent_indices is None
                               else np.asarray(parent_indices, dtype=np.int64))
        rows, cols = np.nonzero(self.table == 0)
        inv = np.empty(n, dtype=np.int64)
        inv[rows] = cols
        self.inverse = inv

    @property
    def order(self) -> int:
        return len(self.elements)

    def __len__(self):
        return self.order

    @property
    def dim(self) -> int:
        return self.elements[0].dim

    def mul(self, i: int, j: int) -> int:
        return int(self.table[i, j])

    def linear_parts(self) -> np.ndarray:
        return np.array([g.matrix for g in self.elements]).reshape(self.order, self.dim, self.dim)

    def element_order(self, i: int) -> int:
        k, cur = 1, i
        while cur != 0:
            cur = int(self.table[cur, i])
            k += 1
        return k

    def powers(self, i: int) -> list[int]:
        out, cur = [0], i
        while cur != 0:
            out.append(cur)
            cur = int(self.table[cur, i])
        return out

    @cached_property
    def classes(self) -> tuple[tuple[int, ...], ...]:
        return conjugacy_classes(self)

    @cached_property
    def class_index(self) -> np.ndarray:
        idx = np.empty(self.order, dtype=np.int64)
        for c, members in enumerate(self.classes):
            idx[list(members)] = c
        return idx

    def is_abelian(self) -> bool:
        return bool(np.array_equal(self.table, self.table.T))

    def subgroup(self, indices: Iterable[int]) -> "FiniteActionGroup":
        """Subgroup on the given element indices (must be closed; identity is put first)."""
        idx = sorted(set(int(i) for i in indices))
        if not idx or idx[0] != 0:
            raise InputError("subgroup must contain the identity")
        pos = {g: k for k, g in enumerate(idx)}
        sub = self.table[np.ix_(idx, idx)]
        try:
            table = np.vectorize(pos.__getitem__, otypes=[np.int64])(sub) if len(idx) > 1 \
                else np.zeros((1, 1), dtype=np.int64)
        except KeyError as exc:
            raise InputError("element set is not closed under multiplication") from exc
        gens = _greedy_generators(table)
        return FiniteActionGroup([self.elements[i] for i in idx], table, gens,
                                 lattice=self.lattice, parent_indices=self.parent_indices[idx])

    def index_of(self, g: AffineIsometry) -> int | None:
        for i, h in enumerate(self.elements):
            if h.equals(g):
                return i
        return None

    def __repr__(self):
        return f"FiniteActionGroup(order={self.order}, dim={self.dim}, lattice={self.lattice})"


def _greedy_generators(table: np.ndarray) -> list[int]:
    n = table.shape[0]
    covered = np.zeros(n, dtype=bool)
    covered[0] = True
    gens: list[int] = []
    for g in range(1, n):
        if covered[g]:
            continue
        gens.append(g)
        members = [i for i in range(n) if covered[i]]
        # close under right multiplication by generators
        frontier = members
        while frontier:
            nxt = []
            for m in frontier:
                for s in gens:
                    p = int(table[m, s])
                    if not covered[p]:
                        covered[p] = True
                        nxt.append(p)
            frontier = nxt
    return gens


def generate_group(generators: Sequence[AffineIsometry], lattice: bool = False,
                   max_order: int = DEFAULT_MAX_ORDER, dim: int | None = None) -> FiniteActionGroup:
    """Close a set of affine isometries under composition.

    Parameters
    ----------
    generators
        Generating isometries.  Each is validated (orthogonality, lattice).
    lattice
        Treat translations modulo ``Z^n``.
    max_order
        Abort with :class:`OrderExceeded` past this many elements.
    dim
        Needed only when ``generators`` is empty.
    """
    gens = []
    for g in generators:
        if g.lattice != lattice:
            g = AffineIsometry(g.linear, g.translation, lattice=lattice)
        g._validate()
        gens.append(g)
    if dim is None:
        if not gens:
            raise InputError("dimension required for an empty generator list")
        dim = gens[0].dim
    if any(g.dim != dim for g in gens):
        raise InputError("generators have inconsistent dimensions")

    ident = AffineIsometry.identity(dim, lattice=lattice)
    elements = [ident]
    index = _ElementIndex()
    index.add(ident, 0)
    parent: list[tuple[int, int]] = [(-1, -1)]
    gen_idx = []
    # right Cayley graph by BFS
    queue = 0
    right = {}
    while queue < len(elements):
        e = elements[queue]
        for s, g in enumerate(gens):
            prod = e @ g
            found = index.find(prod)
            if found is None:
                found = len(elements)
                if found >= max_order:
                    raise OrderExceeded(f"group closure exceeded {max_order} elements")
                elements.append(prod)
                index.add(prod, found)
                parent.append((queue, s))
            right[(queue, s)] = found
        queue += 1

    n = len(elements)
    gen_table = np.zeros((n, max(len(gens), 1)), dtype=np.int64)
    for (i, s), j in right.items():
        gen_table[i, s] = j
    for s in range(len(gens)):
        gen_idx.append(int(gen_table[0, s]))
    table = np.zeros((n, n), dtype=np.int64)
    table[:, 0] = np.arange(n)
    for j in range(1, n):
        p, s = parent[j]
        table[:, j] = gen_table[table[:, p], s]
    return FiniteActionGroup(elements, table, gen_idx, lattice=lattice)


def trivial_group(dim: int, lattice: bool = False) -> FiniteActionGroup:
    return generate_group([], lattice=lattice, dim=dim)


def conjugacy_classes(G: FiniteActionGroup) -> tuple[tuple[int, ...], ...]:
    """Partition element indices into conjugacy classes, ordered by first member."""
    n = G.order
    seen = np.zeros(n, dtype=bool)
    classes = []
    for g in range(n):
        if seen[g]:
            continue
        # h g h^-1 for all h
        conj = G.table[G.table[:, g], G.inverse]
        members = tuple(sorted(set(int(c) for c in conj)))
        seen[list(members)] = True
        classes.append(members)
    return tuple(classes)


def centralizer(G: FiniteActionGroup, g: int) -> FiniteActionGroup:
    """Subgroup of elements commuting with element ``g``."""
    members = np.nonzero(G.table[:, g] == G.table[g, :])[0]
    return G.subgroup(members)


# ---------------------------------------------------------------------------
# complex structures
# ---------------------------------------------------------------------------

class ComplexStructure:
    """An orthogonal ``J`` with ``J @ J = -I``."""

    def __init__(self, J, tol: float = 1e-9):
        J = np.asarray(J, dtype=float) if not isinstance(J, np.ndarray) or J.dtype != object \
            else J.astype(float)
        if J.size == 0:
            J = J.reshape(0, 0)
        if J.ndim != 2 or J.shape[0] != J.shape[1] or J.shape[0] % 2:
            raise InputError(f"complex structure must be an even square matrix, got {J.shape}")
        n = J.shape[0]
        if np.max(np.abs(J @ J + np.eye(n)), initial=0.0) > tol:
            raise InputError("complex structure does not square to -I")
        if np.max(np.abs(J.T @ J - np.eye(n)), initial=0.0) > tol:
            raise InputError("complex structure is not orthogonal")
        self.matrix = J

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def standard(cls, n: int) -> "ComplexStructure":
        """Block diagonal ``[[0, -1], [1, 0]]``: pairs (x1, x2), (x3, x4), ... are complex coordinates."""
        if n % 2:
            raise InputError("standard complex structure needs even dimension")
        J = np.zeros((n, n))
        for k in range(0, n, 2):
            J[k + 1, k] = 1.0
            J[k, k + 1] = -1.0
        return cls(J)

    def commutes_with(self, L: np.ndarray, tol: float = 1e-9) -> bool:
        return float(np.max(np.abs(L @ self.matrix - self.matrix @ L), initial=0.0)) <= tol


# ---------------------------------------------------------------------------
# representations
# ---------------------------------------------------------------------------

def _orthonormalize(basis: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    if basis.shape[1] == 0:
        return basis
    u, s, _ = np.linalg.svd(basis, full_matrices=False)
    return u[:, s > tol * max(1.0, s[0])]


class RealRepresentation:
    """An invariant subspace ``W`` of an ambient orthogonal representation.

    Parameters
    ----------
    group
        The acting group.
    ambient_action
        Array ``(|G|, n, n)``: the orthogonal matrix of each element on ``V``.
    basis
        ``(n, k)`` orthonormal basis of ``W``; defaults to all of ``V``.
    """

    def __init__(self, group: FiniteActionGroup, ambient_action: np.ndarray,
                 basis: np.ndarray | None = None, tol: float = 1e-6):
        A = np.asarray(ambient_action, dtype=float)
        if A.ndim != 3 or A.shape[0] != group.order or A.shape[1] != A.shape[2]:
            raise InputError("ambient action must have shape (|G|, n, n)")
        n = A.shape[1]
        if basis is None:
            B = np.eye(n)
        else:
            B = np.asarray(basis, dtype=float)
            B = B.reshape(n, -1) if n else B.reshape(0, 0)
        self.group = group
        self.ambient_action = A
        self.basis = B
        self.action = np.einsum("ji,gjk,kl->gil", B, A, B)
        # W must be invariant: (I - B B^T) A_g B = 0
        resid = A @ B - B @ self.action
        if resid.size and float(np.max(np.abs(resid))) > tol:
            raise InputError(f"subspace is not invariant (residual {float(np.max(np.abs(resid))):.2e})")

    @classmethod
    def tangent(cls, group: FiniteActionGroup) -> "RealRepresentation":
        """Linear parts of the group acting on the whole chart tangent space."""
        return cls(group, group.linear_parts())

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def subrep(self, basis: np.ndarray) -> "RealRepresentation":
        """Representation on an invariant subspace given in ambient coordinates."""
        return RealRepresentation(self.group, self.ambient_action, basis)

    def restrict_group(self, sub: FiniteActionGroup) -> "RealRepresentation":
        """Restrict to a subgroup produced by ``self.group.subgroup``."""
        local = _local_indices(self.group, sub)
        return RealRepresentation(sub, self.ambient_action[local], self.basis)

    def __repr__(self):
        return f"RealRepresentation(dim={self.dim}, ambient_dim={self.ambient_dim}, |G|={self.group.order})"


def _local_indices(group: FiniteActionGroup, sub: FiniteActionGroup) -> np.ndarray:
    pos = {int(p): i for i, p in enumerate(group.parent_indices)}
    try:
        return np.array([pos[int(p)] for p in sub.parent_indices], dtype=np.int64)
    except KeyError as exc:
        raise InputError("not a subgroup of this representation's group") from exc


def fixed_subspace(rep: RealRepresentation, g: int, tol: float = 1e-8) -> RealRepresentation:
    """``W^g`` as a representation of the centralizer of ``g``."""
    C = centralizer(rep.group, g)
    A = rep.action[g] - np.eye(rep.dim)
    if rep.dim == 0:
        null = np.zeros((0, 0))
    else:
        _, s, vt = np.linalg.svd(A)
        null = vt[s <= tol].T
    sub = rep.restrict_group(C)
    return RealRepresentation(C, sub.ambient_action, rep.basis @ null)


def is_orientation_preserving(rep: RealRepresentation) -> bool:
    if rep.dim == 0:
        return True
    return bool(np.all(np.linalg.det(rep.action) > 0))


def character_of(rep: RealRepresentation) -> np.ndarray:
    """Trace of the action on one representative per conjugacy class."""
    reps = [c[0] for c in rep.group.classes]
    if rep.dim == 0:
        return np.zeros(len(reps))
    return np.trace(rep.action[reps], axis1=1, axis2=2)


def same_isomorphism_class(a: RealRepresentation, b: RealRepresentation,
                           tol: float = CHARACTER_TOL) -> bool:
    if a.group.order != b.group.order:
        return False
    return bool(np.max(np.abs(character_of(a) - character_of(b)), initial=0.0) <= tol)


def age(g: int, J: ComplexStructure, rep: RealRepresentation) -> Fraction:
    """Sum of eigenphases in ``[0, 1)`` of ``g`` acting complex-linearly on ``W``.

    ``J`` acts on the ambient space of ``rep``; ``W`` must be ``J``-invariant
    and the action of ``g`` must commute with ``J`` there.
    """
    if rep.dim == 0:
        return Fraction(0)
    if J.dim != rep.ambient_dim:
        raise InputError("complex structure dimension does not match the representation")
    B = rep.basis
    JW = B.T @ J.matrix @ B
    if np.max(np.abs(J.matrix @ B - B @ JW)) > PHASE_TOL:
        raise ActionNotComplexLinear("subspace is not invariant under the complex structure")
    A = rep.action[g]
    if np.max(np.abs(A @ JW - JW @ A)) > PHASE_TOL:
        raise ActionNotComplexLinear("group element does not commute with the complex structure")
    k = rep.dim
    # +i eigenspace of J, i.e. the complex coordinates on which J is multiplication by i
    P = 0.5 * (np.eye(k) - 1j * JW)
    u, s, _ = np.linalg.svd(P)
    V = u[:, : k // 2]
    M = V.conj().T @ A @ V
    order = rep.group.element_order(g)
    total = Fraction(0)
    for lam in np.linalg.eigvals(M):
        a = (np.angle(lam) / (2 * np.pi)) % 1.0
        r = round(a * order)
        if abs(a - r / order) > PHASE_TOL:
            raise PhaseNotRational(f"eigenphase {a:.9f} is not a multiple of 1/{order}")
        total += Fraction(r % order, order)
    return total


def average_projector(actions: np.ndarray, P: np.ndarray) -> np.ndarray:
    """Reynolds average ``(1/|G|) sum_g A_g P A_g^T`` of a projector."""
    return np.einsum("gij,jk,glk->il", actions, P, actions) / len(actions)


def block_diag(*blocks: np.ndarray) -> np.ndarray:
    sizes = [b.shape[0] for b in blocks]
    out = np.zeros((sum(sizes), sum(sizes)))
    k = 0
    for b, m in zip(blocks, sizes):
        out[k:k + m, k:k + m] = b
        k += m
    return out


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])
