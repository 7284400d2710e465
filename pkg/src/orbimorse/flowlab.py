"""Gradient flows on a chart, integrated numerically.

The integrator is an embedded Dormand-Prince 5(4) pair with per-trajectory
step-size control, vectorized over a batch of starting points so that basin
censuses over hundreds of seeds stay cheap.  Flows are computed upstairs on
the chart; a torus chart is unwrapped during integration and compared modulo
the lattice.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .critical import CriticalPointData, QuotientModel
from .errors import NearCriticalSingularity, StepFailure

UNIT_SPEED_GUARD = 1e-4   # abort when |grad f|^2 drops below this


class Field(enum.Enum):
    NEG_GRADIENT = "neg"
    POS_GRADIENT = "pos"
    UNIT_SPEED = "unit"


class Status(enum.Enum):
    CONVERGED = "converged"
    MAX_TIME = "max_time"
    LEFT_DOMAIN = "left_domain"
    NEAR_CRITICAL = "near_critical"
    STEP_FAILURE = "step_failure"


@dataclass(frozen=True)
class StepControl:
    rtol: float = 1e-9
    atol: float = 1e-11
    h0: float = 1e-3
    h_min: float = 1e-14
    max_steps: int = 200_000
    domain_radius: float = 1e3


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    f_values: np.ndarray
    status: Status
    critical_index: int | None = None

    @property
    def terminal(self) -> np.ndarray:
        return self.states[-1]

    def to_records(self) -> list[dict]:
        return [{"t": float(t), "x": [float(v) for v in x], "f": float(f)}
                for t, x, f in zip(self.times, self.states, self.f_values)]


# Dormand-Prince 5(4) tableau
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


def _vector_field(model: QuotientModel, X: np.ndarray, field: Field):
    jet = model.function.jet(X, 1)
    g = jet.g
    if field is Field.NEG_GRADIENT:
        return -g, jet.v, g
    if field is Field.POS_GRADIENT:
        return g, jet.v, g
    n2 = np.sum(g * g, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = g / n2[:, None]
    return v, jet.v, g


def integrate_batch(model: QuotientModel, X0, field: Field, t_max: float,
                    control: StepControl = StepControl(), shared_step: bool = False,
                    stop_at_critical: bool = True, record: bool = True) -> list[Trajectory]:
    """Integrate ``x' = field(x)`` from each row of ``X0`` up to ``t_max``.

    With ``shared_step`` all rows advance with the same step (the smallest
    acceptable one), so their records share a time grid.  Rows stop early on
    convergence (gradient below ``newton_tol``), on leaving the domain, or,
    for the unit-speed field, when the gradient gets too small.
    """
    field = Field(field)
    X = np.atleast_2d(np.asarray(X0, dtype=float)).copy()
    B, n = X.shape
    t = np.zeros(B)
    h = np.full(B, min(control.h0, t_max) if t_max > 0 else 0.0)
    status = [None] * B
    tol_g = model.tolerances.newton_tol
    K = np.zeros((7, B, n))
    v, fv, g = _vector_field(model, X, field)
    hist_t = [[0.0] for _ in range(B)]
    hist_x = [[X[i].copy()] for i in range(B)]
    hist_f = [[float(fv[i])] for i in range(B)]

    def _check(rows, fv_rows, g_rows):
        gn2 = np.sum(g_rows * g_rows, axis=1)
        for j, i in enumerate(rows):
            if field is Field.UNIT_SPEED:
                if gn2[j] < UNIT_SPEED_GUARD:
                    status[i] = Status.NEAR_CRITICAL
            elif stop_at_critical and np.sqrt(gn2[j]) < tol_g:
                status[i] = Status.CONVERGED
            if status[i] is None and not model.lattice and np.linalg.norm(X[i]) > control.domain_radius:
                status[i] = Status.LEFT_DOMAIN
            if status[i] is None and not np.isfinite(fv_rows[j]):
                status[i] = Status.LEFT_DOMAIN

    _check(range(B), fv, g)
    K[0] = v
    for _ in range(control.max_steps):
        active = np.array([status[i] is None and t[i] < t_max for i in range(B)])
        if not active.any():
            break
        rows = np.nonzero(active)[0]
        hh = np.minimum(h[rows], t_max - t[rows])
        if shared_step:
            hh[:] = hh.min()
        Xa = X[rows]
        k = np.zeros((7, len(rows), n))
        k[0] = K[0][rows]
        for s in range(1, 7):
            Y = Xa + hh[:, None] * np.tensordot(_A[s], k[:s], axes=(0, 0))
            k[s] = _vector_field(model, Y, field)[0]
        Xnew = Xa + hh[:, None] * np.tensordot(_B5, k, axes=(0, 0))
        errv = hh[:, None] * np.tensordot(_E, k, axes=(0, 0))
        scale = control.atol + control.rtol * np.maximum(np.abs(Xa), np.abs(Xnew))
        with np.errstate(invalid="ignore"):
            err = np.sqrt(np.mean((errv / scale) ** 2, axis=1))
        err = np.where(np.isfinite(err), err, np.inf)
        acc = err <= 1.0
        if shared_step:
            acc[:] = acc.all()
        with np.errstate(divide="ignore"):
            fac = np.where(err > 0, 0.9 * err ** -0.2, 5.0)
        fac = np.clip(fac, 0.2, 5.0)
        if shared_step:
            fac[:] = fac.min()
        h[rows] = hh * fac
        for j, i in enumerate(rows):
            if not acc[j] and h[i] < control.h_min:
                status[i] = Status.STEP_FAILURE
        acc_rows = rows[acc]
        if acc_rows.size:
            X[acc_rows] = Xnew[acc]
            t[acc_rows] += hh[acc]
            v2, fv2, g2 = _vector_field(model, X[acc_rows], field)
            K[0][acc_rows] = v2
            for j, i in enumerate(acc_rows):
                if record:
                    hist_t[i].append(float(t[i]))
                    hist_x[i].append(X[i].copy())
                    hist_f[i].append(float(fv2[j]))
            _check(acc_rows, fv2, g2)
    out = []
    for i in range(B):
        st = status[i] or Status.MAX_TIME
        if not record:
            hist_t[i], hist_x[i] = [float(t[i])], [X[i].copy()]
            hist_f[i] = [float(model.function.values(X[i][None, :])[0])]
        out.append(Trajectory(np.array(hist_t[i]), np.array(hist_x[i]), np.array(hist_f[i]), st))
    return out


def match_critical(model: QuotientModel, x, certified: Sequence[CriticalPointData],
                   radius: float | None = None) -> int | None:
    """Index of the certified point whose orbit passes within ``radius`` of ``x``."""
    if radius is None:
        radius = 10 * model.tolerances.orbit_tol
    for k, c in enumerate(certified):
        if c.location is not None and model.orbit_distance(c.location, np.asarray(x)[None, :])[0] < radius:
            return k
    return None


def _attach(model, trajs, certified):
    for tr in trajs:
        if tr.status is Status.CONVERGED and certified is not None:
            tr.critical_index = match_critical(model, tr.terminal, certified)
    return trajs


def integrate(model: QuotientModel, x0, field: Field = Field.NEG_GRADIENT, t_max: float = 50.0,
              control: StepControl = StepControl(),
              certified: Sequence[CriticalPointData] | None = None) -> Trajectory:
    """Integrate one trajectory.

    Raises
    ------
    NearCriticalSingularity
        Unit-speed field with ``|grad f|^2`` below the guard threshold.
    StepFailure
        Step size underflow.
    """
    tr = integrate_batch(model, [x0], field, t_max, control)[0]
    if tr.status is Status.NEAR_CRITICAL:
        raise NearCriticalSingularity(
            f"|grad f|^2 fell below {UNIT_SPEED_GUARD} at t={tr.times[-1]:.6g}")
    if tr.status is Status.STEP_FAILURE:
        raise StepFailure(f"step size underflow at t={tr.times[-1]:.6g}")
    return _attach(model, [tr], certified)[0]


def verify_unit_speed(traj: Trajectory) -> float:
    """Max ``|d(f o phi)/dt - 1|`` from finite differences of the recorded values."""
    dt = np.diff(traj.times)
    if dt.size == 0:
        return 0.0
    return float(np.max(np.abs(np.diff(traj.f_values) / dt - 1.0)))


def verify_equivariance(model: QuotientModel, x0, g: int, field: Field = Field.NEG_GRADIENT,
                        t_max: float = 5.0, control: StepControl = StepControl(rtol=1e-10, atol=1e-12)) -> float:
    """Max over the shared time grid of ``dist(phi_t(g x0), g phi_t(x0))`` (mod lattice)."""
    elem = model.group.elements[g]
    x0 = np.asarray(x0, dtype=float)
    a, b = integrate_batch(model, [x0, elem.apply(x0)], field, t_max, control,
                           shared_step=True, stop_at_critical=False)
    m = min(len(a.times), len(b.times))
    return float(np.max(model.distance(b.states[:m], elem.apply(a.states[:m])), initial=0.0))


@dataclass
class Census:
    hits: dict[int, int]
    not_converged: int
    uncertified: int
    statuses: dict[str, int]

    @property
    def total(self) -> int:
        return sum(self.hits.values()) + self.not_converged + self.uncertified

    @property
    def convergence_rate(self) -> float:
        return sum(self.hits.values()) / self.total if self.total else 0.0


def basin_census(model: QuotientModel, seeds, certified: Sequence[CriticalPointData],
                 t_max: float = 50.0, control: StepControl = StepControl()) -> Census:
    """Tally which certified critical point each negative-gradient flow line ends at."""
    trajs = integrate_batch(model, seeds, Field.NEG_GRADIENT, t_max, control, record=False)
    _attach(model, trajs, certified)
    hits: dict[int, int] = {}
    statuses: dict[str, int] = {}
    nc = unc = 0
    for tr in trajs:
        statuses[tr.status.value] = statuses.get(tr.status.value, 0) + 1
        if tr.status is not Status.CONVERGED:
            nc += 1
        elif tr.critical_index is None:
            unc += 1
        else:
            hits[tr.critical_index] = hits.get(tr.critical_index, 0) + 1
    return Census(dict(sorted(hits.items())), nc, unc, statuses)
