"""Critical-point analysis on a global-quotient chart ``[U/G]``.

The pipeline is: Newton on the gradient from seeds, dedup by distance, dedup
by ``G``-orbit, stabilizer of each representative, equivariant split of the
Hessian into index and coindex representations.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    DegenerateCriticalPoint,
    InputError,
    NoSeeds,
    NonFiniteFunctionValue,
    NotInvariant,
    SplitNotInvariant,
)
from .expr import Expression, check_invariance
from .group_rep import (
    AffineIsometry,
    ComplexStructure,
    FiniteActionGroup,
    RealRepresentation,
    average_projector,
    block_diag,
    generate_group,
    is_orientation_preserving,
    to_scalar,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Tolerances:
    newton_tol: float = 1e-8
    hessian_zero_tol: float = 1e-6      # relative to the largest |eigenvalue|
    hessian_abs_tol: float = 1e-6       # absolute floor for the same test
    orbit_tol: float = 1e-6
    invariance_tol: float = 1e-9
    split_tol: float = 1e-6


@dataclass(frozen=True)
class SeedConfig:
    grid: int = 4
    random: int = 0
    rng_seed: int = 0
    box: tuple[float, float] = (-1.0, 1.0)


@dataclass
class QuotientModel:
    """A chart ``R^dim`` (or ``T^dim`` with ``lattice``) with a finite group and an invariant function."""

    dim: int
    group: FiniteActionGroup
    function: Expression
    complex_structure: ComplexStructure | None = None
    tolerances: Tolerances = field(default_factory=Tolerances)
    seeds: SeedConfig = field(default_factory=SeedConfig)
    check: bool = True

    def __post_init__(self):
        if self.group.dim != self.dim or self.function.dim != self.dim:
            raise InputError("group, function and model dimensions differ")
        if self.check:
            rep = check_invariance(self.function, self.group, tol=self.tolerances.invariance_tol)
            if not rep.invariant:
                raise NotInvariant(f"function is not invariant under the group "
                                   f"(worst violation {rep.worst:.3e})")
        J = self.complex_structure
        if J is not None:
            if J.dim != self.dim:
                raise InputError("complex structure has the wrong dimension")
            for g in self.group.elements:
                if not J.commutes_with(g.matrix):
                    raise InputError("complex structure does not commute with the group")

    @property
    def lattice(self) -> bool:
        return self.group.lattice

    def wrap(self, X: np.ndarray) -> np.ndarray:
        """Canonical coordinates: mod 1 into ``[-orbit_tol, 1 - orbit_tol)`` on a torus."""
        if not self.lattice:
            return np.asarray(X, dtype=float)
        tol = self.tolerances.orbit_tol
        X = np.asarray(X, dtype=float)
        return X - np.floor(X + tol)

    def displacement(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        d = np.asarray(X, dtype=float) - np.asarray(Y, dtype=float)
        if self.lattice:
            d = d - np.round(d)
        return d

    def distance(self, X, Y) -> np.ndarray:
        return np.linalg.norm(self.displacement(X, Y), axis=-1)

    def orbit_distance(self, x, Y) -> np.ndarray:
        """Distance from each row of ``Y`` to the orbit of ``x``."""
        Y = np.atleast_2d(Y)
        best = np.full(len(Y), np.inf)
        for g in self.group.elements:
            best = np.minimum(best, self.distance(g.apply(x), Y))
        return best


class SearchResult(NamedTuple):
    points: np.ndarray
    seeds: int
    converged: int
    dropped: int


@dataclass(frozen=True)
class CriticalPointData:
    """One critical point with its stabilizer and index/coindex representations.

    ``tangent_rep`` is the stabilizer acting on ``T_c``; the index and coindex
    representations are subrepresentations of it.  ``location`` and
    ``hessian`` are absent for directly entered data.
    """

    label: str
    value: float
    stabilizer: FiniteActionGroup
    tangent_rep: RealRepresentation
    index_rep: RealRepresentation
    coindex_rep: RealRepresentation
    orientable: bool
    location: np.ndarray | None = None
    hessian: np.ndarray | None = None
    complex_structure: ComplexStructure | None = None

    @property
    def index(self) -> int:
        return self.index_rep.dim

    @property
    def coindex(self) -> int:
        return self.coindex_rep.dim

    def adapted_basis(self) -> np.ndarray:
        return np.hstack([self.index_rep.basis, self.coindex_rep.basis])

    @classmethod
    def from_actions(cls, label: str, value: float, index_actions: Sequence, coindex_actions: Sequence,
                     auxiliary: Sequence | None = None, order: int | None = None,
                     complex_structure=None) -> "CriticalPointData":
        """Build data from explicit generator actions on ``ind`` and ``coind``.

        The tangent space is ``ind + coind`` in that order.  ``auxiliary``
        blocks, one per generator, are appended to the carrier space only to
        make the group faithful when the tangent action has a kernel.
        """
        k_gens = len(index_actions)
        if len(coindex_actions) != k_gens or (auxiliary is not None and len(auxiliary) != k_gens):
            raise InputError(f"{label}: per-generator action lists have different lengths")

        def _mats(seq, what):
            out = []
            for m in seq:
                a = np.asarray(m, dtype=object)
                a = (np.zeros((0, 0)) if a.size == 0
                     else np.vectorize(lambda v: float(to_scalar(v)), otypes=[float])(a))
                if a.ndim != 2 or a.shape[0] != a.shape[1]:
                    raise InputError(f"{label}: {what} matrices must be square")
                out.append(a)
            if len({a.shape for a in out}) > 1:
                raise InputError(f"{label}: {what} matrices differ in size")
            return out

        ind = _mats(index_actions, "index_action")
        coind = _mats(coindex_actions, "coindex_action")
        aux = _mats(auxiliary, "auxiliary") if auxiliary else [np.zeros((0, 0))] * k_gens
        if k_gens == 0:
            raise InputError(f"{label}: at least one generator (possibly the identity) is required "
                             "to fix the index and coindex dimensions")
        ki, kc, ka = ind[0].shape[0], coind[0].shape[0], aux[0].shape[0]
        n = ki + kc
        carrier = [AffineIsometry(block_diag(a, b, c)) for a, b, c in zip(ind, coind, aux)]
        G = generate_group(carrier, dim=n + ka)
        if order is not None and G.order != order:
            raise InputError(f"{label}: generators produce a group of order {G.order}, "
                             f"declared order {order}")
        tangent_action = G.linear_parts()[:, :n, :n]
        tangent = RealRepresentation(G, tangent_action)
        eye = np.eye(n)
        ind_rep = tangent.subrep(eye[:, :ki])
        coind_rep = tangent.subrep(eye[:, ki:])
        J = complex_structure
        if J is not None and not isinstance(J, ComplexStructure):
            J = ComplexStructure(J)
        if J is not None and J.dim != n:
            raise InputError(f"{label}: complex structure must act on the {n}-dimensional tangent space")
        return cls(label=label, value=float(value), stabilizer=G, tangent_rep=tangent,
                   index_rep=ind_rep, coindex_rep=coind_rep,
                   orientable=is_orientation_preserving(ind_rep), complex_structure=J)


# ---------------------------------------------------------------------------
# search
# ---------------------------------------------------------------------------

def seed_points(model: QuotientModel) -> np.ndarray:
    cfg = model.seeds
    lo, hi = (0.0, 1.0) if model.lattice else cfg.box
    parts = []
    if cfg.grid > 0:
        axis = lo + (np.arange(cfg.grid) + 0.5) * (hi - lo) / cfg.grid
        mesh = np.meshgrid(*([axis] * model.dim), indexing="ij")
        parts.append(np.stack([m.ravel() for m in mesh], axis=1))
    if cfg.random > 0:
        rng = np.random.default_rng(cfg.rng_seed)
        parts.append(rng.uniform(lo, hi, size=(cfg.random, model.dim)))
    if not parts:
        raise NoSeeds("no grid or random seeds configured")
    return np.vstack(parts)


def newton(model: QuotientModel, X0: np.ndarray, max_iter: int = 50,
           max_halvings: int = 30) -> tuple[np.ndarray, np.ndarray]:
    """Damped Newton on ``grad f = 0`` for a batch of seeds.

    Returns the final points and a boolean mask of those that converged.
    Iteration continues past ``newton_tol`` until the step stalls, so that
    degenerate critical points are approached as closely as nondegenerate ones.
    """
    f = model.function
    X = np.array(X0, dtype=float)
    alive = np.ones(len(X), dtype=bool)
    done = np.zeros(len(X), dtype=bool)
    for _ in range(max_iter):
        act = np.nonzero(alive & ~done)[0]
        if act.size == 0:
            break
        jet = f.jet(X[act], 2)
        g, H = jet.g, 0.5 * (jet.h + jet.h.transpose(0, 2, 1))
        ok = np.all(np.isfinite(g), axis=1) & np.all(np.isfinite(H), axis=(1, 2))
        gn = np.linalg.norm(g, axis=1)
        exact = ok & (gn == 0)
        done[act[exact]] = True
        step = np.zeros_like(g)
        cond = np.full(len(act), np.inf)
        good = ok & ~exact
        if np.any(good):
            cond[good] = np.linalg.cond(H[good])
        solvable = good & (cond < 1e14)
        alive[act[good & ~solvable]] = False
        alive[act[~ok]] = False
        if np.any(solvable):
            step[solvable] = -np.linalg.solve(H[solvable], g[solvable][..., None])[..., 0]
        idx = act[solvable]
        s = step[solvable]
        g0 = gn[solvable]
        t = np.ones(len(idx))
        accepted = np.zeros(len(idx), dtype=bool)
        for _h in range(max_halvings):
            trial = X[idx] + t[:, None] * s
            gt = np.linalg.norm(f.jet(trial, 1).g, axis=1)
            better = np.isfinite(gt) & (gt < g0) & ~accepted
            X[idx[better]] = trial[better]
            accepted |= better
            if accepted.all():
                break
            t[~accepted] *= 0.5
        # no decrease possible: converged if already below tolerance, else give up
        floor = ~accepted & (g0 <= model.tolerances.newton_tol)
        done[idx[floor]] = True
        alive[idx[~accepted & ~floor]] = False
        # stalled steps: converged to working precision
        scale = 1.0 + np.linalg.norm(X[idx], axis=1)
        stalled = accepted & (np.linalg.norm(s, axis=1) * t < 1e-14 * scale)
        done[idx[stalled]] = True
        if model.lattice:
            X = np.where(alive[:, None], model.wrap(X), X)
    gfin = np.full(len(X), np.inf)
    if np.any(alive):
        gg = f.jet(X[alive], 1).g
        gfin[alive] = np.linalg.norm(gg, axis=1)
    converged = alive & (gfin <= model.tolerances.newton_tol)
    return X, converged


def _cluster(model: QuotientModel, X: np.ndarray, tol: float) -> np.ndarray:
    reps: list[np.ndarray] = []
    for x in X:
        if reps and np.min(model.distance(np.asarray(reps), x)) < tol:
            continue
        reps.append(x)
    return np.asarray(reps).reshape(-1, model.dim)


def _canonical_order(X: np.ndarray) -> np.ndarray:
    if len(X) == 0:
        return X
    keys = np.round(X, 8)
    return X[np.lexsort(keys.T[::-1])]


def find_critical_points(model: QuotientModel) -> SearchResult:
    """Newton from grid and random seeds; converged points deduplicated by distance.

    Completeness is heuristic: the counts in the result say how many seeds
    converged and how many were dropped (divergence or singular Jacobian).
    """
    seeds = seed_points(model)
    vals = model.function.values(seeds)
    if not np.all(np.isfinite(vals)):
        raise NonFiniteFunctionValue("function is not finite at some seed points")
    X, ok = newton(model, seeds)
    pts = _canonical_order(model.wrap(X[ok]))
    pts = _cluster(model, pts, model.tolerances.orbit_tol)
    log.debug("critical search: %d seeds, %d converged, %d distinct", len(seeds), int(ok.sum()), len(pts))
    return SearchResult(pts, len(seeds), int(ok.sum()), int((~ok).sum()))


def canonical_form(model: QuotientModel, x: np.ndarray) -> np.ndarray:
    """Lexicographically smallest point of the orbit of ``x`` (in wrapped coordinates)."""
    images = model.wrap(np.array([g.apply(x) for g in model.group.elements]))
    return _canonical_order(images)[0]


def orbit_dedup(model: QuotientModel, points) -> np.ndarray:
    """One canonical representative per ``G``-orbit, in canonical order."""
    tol = model.tolerances.orbit_tol
    reps: list[np.ndarray] = []
    for x in np.atleast_2d(np.asarray(points, dtype=float)).reshape(-1, model.dim):
        if reps and np.min(model.orbit_distance(x, np.asarray(reps))) < tol:
            continue
        reps.append(x)
    canon = np.array([canonical_form(model, x) for x in reps]).reshape(-1, model.dim)
    return _canonical_order(canon)


def stabilizer_of(model: QuotientModel, x) -> FiniteActionGroup:
    x = np.asarray(x, dtype=float)
    tol = model.tolerances.orbit_tol
    members = [i for i, g in enumerate(model.group.elements)
               if model.distance(g.apply(x), x) < tol]
    return model.group.subgroup(members)


def _invariant_basis(actions: np.ndarray, P: np.ndarray, tol: float) -> np.ndarray:
    Pbar = average_projector(actions, P)
    resid = float(np.max(np.abs(Pbar - P), initial=0.0))
    if resid > tol:
        raise SplitNotInvariant(f"eigenspace is not stabilizer-invariant (residual {resid:.2e})")
    w, V = np.linalg.eigh(0.5 * (Pbar + Pbar.T))
    return V[:, w > 0.5]


def analyze_critical_point(model: QuotientModel, x, label: str = "c") -> CriticalPointData:
    """Stabilizer, equivariant Hessian split and orientability at a critical point."""
    x = np.asarray(x, dtype=float)
    tol = model.tolerances
    jet = model.function.jet(x[None, :], 2)
    g = jet.g[0]
    if np.linalg.norm(g) > tol.newton_tol:
        raise InputError(f"{label}: gradient norm {np.linalg.norm(g):.2e} exceeds newton_tol")
    H = 0.5 * (jet.h[0] + jet.h[0].T)
    w, V = np.linalg.eigh(H)
    scale = float(np.max(np.abs(w), initial=0.0))
    thresh = max(tol.hessian_abs_tol, tol.hessian_zero_tol * scale)
    if np.any(np.abs(w) <= thresh):
        raise DegenerateCriticalPoint(
            f"degenerate critical point at {np.array2string(x, precision=6)} "
            f"(smallest |eigenvalue| {float(np.min(np.abs(w))):.2e})", location=x)
    stab = stabilizer_of(model, x)
    tangent = RealRepresentation.tangent(stab)
    neg = V[:, w < 0]
    P = neg @ neg.T
    B_ind = _invariant_basis(tangent.ambient_action, P, tol.split_tol)
    B_coind = _invariant_basis(tangent.ambient_action, np.eye(model.dim) - P, tol.split_tol)
    if B_ind.shape[1] + B_coind.shape[1] != model.dim:
        raise SplitNotInvariant(f"{label}: index and coindex do not span the tangent space")
    ind = tangent.subrep(B_ind)
    coind = tangent.subrep(B_coind)
    for B, sign in ((B_ind, -1.0), (B_coind, 1.0)):
        if B.shape[1]:
            q = np.linalg.eigvalsh(B.T @ H @ B) * sign
            if np.min(q) <= thresh:
                raise SplitNotInvariant(f"{label}: Hessian is not definite on the split")
    return CriticalPointData(label=label, value=float(jet.v[0]), stabilizer=stab,
                             tangent_rep=tangent, index_rep=ind, coindex_rep=coind,
                             orientable=is_orientation_preserving(ind), location=x,
                             hessian=H, complex_structure=model.complex_structure)


@dataclass
class MorseCertificate:
    points: list[CriticalPointData]
    search: SearchResult
    min_separation: float

    def __len__(self):
        return len(self.points)


def assert_morse(model: QuotientModel) -> MorseCertificate:
    """Full pipeline; raises :class:`DegenerateCriticalPoint` if any point is degenerate."""
    search = find_critical_points(model)
    reps = orbit_dedup(model, search.points)
    vals = model.function.values(reps) if len(reps) else np.zeros(0)
    order = sorted(range(len(reps)), key=lambda i: (round(float(vals[i]), 9), tuple(np.round(reps[i], 8))))
    reps = reps[order]
    data = [analyze_critical_point(model, x, label=f"c{k}") for k, x in enumerate(reps)]
    sep = np.inf
    for i in range(len(reps)):
        for j in range(i + 1, len(reps)):
            sep = min(sep, float(np.min(model.orbit_distance(reps[i], reps[j:j + 1]))))
    return MorseCertificate(data, search, sep)
