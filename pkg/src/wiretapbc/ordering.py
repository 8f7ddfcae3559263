"""Channel orderings: degraded, less-noisy and more-capable.

Degradedness is decided by a linear program. Less-noisiness is tested through
the concavity of ``F(P_X) = I(X;Y) - I(X;Z)`` over the input simplex, which is
equivalent to the quantified definition but can only be sampled, so a clean
run is reported as ``undetermined`` with ``sampled=True`` rather than as a
proof.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
from scipy.optimize import linprog

from .probcore import Dmc, ProbabilityError, binary_entropy, mi_batch, simplex_grid

PROVED = "proved"
REFUTED = "refuted"
UNDETERMINED = "undetermined"

VIOLATION_TOL = 1e-9
DEFAULT_SAMPLES = 2000
DEFAULT_GRID = 64
GRID_MAX_INPUTS = 3


@dataclass
class OrderingReport:
    """Outcome of one ordering check.

    ``holds`` is one of ``proved``, ``refuted`` or ``undetermined``. Sampled
    checks that found no violation are ``undetermined`` with ``sampled=True``.
    """

    relation: str
    holds: str
    witness: Any = None
    residual: float = 0.0
    sampled: bool = False
    details: dict = field(default_factory=dict)

    @property
    def status(self) -> str:
        if self.holds == UNDETERMINED and self.sampled:
            return "sampled-proved"
        return self.holds

    @property
    def refuted(self) -> bool:
        return self.holds == REFUTED

    @property
    def plausible(self) -> bool:
        """True unless a counterexample was found."""
        return self.holds != REFUTED

    def to_dict(self) -> dict:
        w = self.witness
        if isinstance(w, Dmc):
            w = {"kernel": w.rows.tolist()}
        elif isinstance(w, tuple):
            w = {"inputs": [np.asarray(v).tolist() for v in w]}
        return {
            "relation": self.relation,
            "holds": self.holds,
            "status": self.status,
            "sampled": self.sampled,
            "residual": self.residual,
            "witness": w,
            "details": self.details,
        }


def _same_inputs(a: Dmc, b: Dmc) -> None:
    if a.input_size != b.input_size:
        raise ProbabilityError(
            f"input alphabet sizes differ: {a.input_size} vs {b.input_size}")


def check_degraded(w_strong: Dmc, w_weak: Dmc, tol: float = 1e-7) -> OrderingReport:
    """Is ``w_weak`` a degraded version of ``w_strong``?

    Minimises the entrywise L1 distance between ``w_strong @ Q`` and
    ``w_weak`` over row-stochastic ``Q``.
    """
    _same_inputs(w_strong, w_weak)
    a, b = w_strong.rows, w_weak.rows
    nx, ny = a.shape
    nz = b.shape[1]
    nq = ny * nz
    nt = nx * nz
    # variables: q (ny*nz, row-major), then t (nx*nz)
    c = np.concatenate([np.zeros(nq), np.ones(nt)])
    # (A q)_{xz} = sum_y a[x,y] q[y,z]
    m = np.zeros((nt, nq))
    for x in range(nx):
        for z in range(nz):
            m[x * nz + z, np.arange(ny) * nz + z] = a[x]
    eye = np.eye(nt)
    a_ub = np.block([[m, -eye], [-m, -eye]])
    b_ub = np.concatenate([b.ravel(), -b.ravel()])
    a_eq = np.zeros((ny, nq + nt))
    for y in range(ny):
        a_eq[y, y * nz:(y + 1) * nz] = 1.0
    b_eq = np.ones(ny)
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                  bounds=[(0, None)] * (nq + nt), method="highs")
    if res.status != 0 or res.x is None:
        return OrderingReport("degraded", UNDETERMINED, residual=float("nan"),
                              details={"solver_status": int(res.status),
                                       "message": str(res.message)})
    q = np.clip(res.x[:nq].reshape(ny, nz), 0.0, None)
    q = q / q.sum(axis=1, keepdims=True)
    residual = float(np.abs(a @ q - b).sum())
    details = {"lp_objective": float(res.fun), "tol": tol}
    if residual <= tol:
        return OrderingReport("degraded", PROVED, Dmc(q), residual, details=details)
    if residual > 10 * tol:
        details["note"] = "no stochastic kernel reproduces the weaker channel"
        return OrderingReport("degraded", REFUTED, None, residual, details=details)
    return OrderingReport("degraded", UNDETERMINED, Dmc(q), residual, details=details)


def _sample_pairs(rng: np.random.Generator, k: int, samples: int):
    p1 = rng.dirichlet(np.ones(k), size=samples)
    p2 = rng.dirichlet(np.ones(k), size=samples)
    return p1, p2


def _grid_second_differences(k: int, resolution: int):
    """Centres and +/- displacements of grid second differences along e_i - e_j."""
    grid = simplex_grid(k, resolution)
    h = 1.0 / resolution
    plus, minus = [], []
    for i in range(k):
        for j in range(i + 1, k):
            d = np.zeros(k)
            d[i], d[j] = h, -h
            ok = (grid[:, i] >= h - 1e-12) & (grid[:, j] >= h - 1e-12)
            c = grid[ok]
            plus.append(c + d)
            minus.append(c - d)
    if not plus:
        return np.zeros((0, k)), np.zeros((0, k))
    return np.vstack(plus), np.vstack(minus)


def _f_diff(p: np.ndarray, w_y: Dmc, w_z: Dmc) -> np.ndarray:
    return mi_batch(p, w_y.rows) - mi_batch(p, w_z.rows)


def check_less_noisy(w_y: Dmc, w_z: Dmc, samples: int = DEFAULT_SAMPLES, seed: int = 0,
                     grid: int = DEFAULT_GRID) -> OrderingReport:
    """Sampled test of "Y is less noisy than Z" via midpoint concavity."""
    _same_inputs(w_y, w_z)
    k = w_y.input_size
    rng = np.random.default_rng(seed)
    p1, p2 = _sample_pairs(rng, k, samples)
    if k <= GRID_MAX_INPUTS and grid > 0:
        g1, g2 = _grid_second_differences(k, grid)
        p1 = np.vstack([p1, g1])
        p2 = np.vstack([p2, g2])
    mid = 0.5 * (p1 + p2)
    gap = 0.5 * (_f_diff(p1, w_y, w_z) + _f_diff(p2, w_y, w_z)) - _f_diff(mid, w_y, w_z)
    worst = int(np.argmax(gap)) if gap.size else 0
    worst_gap = float(gap[worst]) if gap.size else 0.0
    details = {"pairs_checked": int(gap.size), "max_midpoint_gap": worst_gap,
               "criterion": "concavity of I(X;Y) - I(X;Z)"}
    if worst_gap > VIOLATION_TOL:
        return OrderingReport("less_noisy", REFUTED, (p1[worst], p2[worst]), worst_gap,
                              details=details)
    return OrderingReport("less_noisy", UNDETERMINED, None, max(worst_gap, 0.0),
                          sampled=True, details=details)


def check_more_capable(w_y: Dmc, w_z: Dmc, grid: int = DEFAULT_GRID, seed: int = 0,
                       samples: int = DEFAULT_SAMPLES) -> OrderingReport:
    """Sampled test of I(X;Y) >= I(X;Z) for every input law."""
    _same_inputs(w_y, w_z)
    k = w_y.input_size
    rng = np.random.default_rng(seed)
    pts = [rng.dirichlet(np.ones(k), size=samples), np.eye(k), np.full((1, k), 1.0 / k)]
    if k <= GRID_MAX_INPUTS and grid > 0:
        pts.append(simplex_grid(k, grid))
    p = np.vstack(pts)
    deficit = -_f_diff(p, w_y, w_z)
    worst = int(np.argmax(deficit))
    worst_def = float(deficit[worst])
    details = {"points_checked": int(p.shape[0]), "max_deficit": worst_def}
    if worst_def > VIOLATION_TOL:
        return OrderingReport("more_capable", REFUTED, (p[worst],), worst_def, details=details)
    return OrderingReport("more_capable", UNDETERMINED, None, max(worst_def, 0.0),
                          sampled=True, details=details)


class BecBscClass(str, enum.Enum):
    DEGRADED = "Degraded"
    LESS_NOISY = "LessNoisy"
    MORE_CAPABLE = "MoreCapable"
    ESSENTIALLY_LESS_NOISY = "EssentiallyLessNoisy"


def classify_bec_bsc(e: float, p: float) -> BecBscClass:
    """Ordering band of the pair BEC(e), BSC(p) (the BSC being the weaker side)."""
    if not (0.0 <= e <= 1.0):
        raise ProbabilityError(f"erasure probability e={e} outside [0, 1]")
    if not (0.0 <= p <= 0.5):
        raise ProbabilityError(f"crossover p={p} outside [0, 0.5]")
    if e <= 2 * p:
        return BecBscClass.DEGRADED
    if e <= 4 * p * (1 - p):
        return BecBscClass.LESS_NOISY
    if e <= binary_entropy(p):
        return BecBscClass.MORE_CAPABLE
    return BecBscClass.ESSENTIALLY_LESS_NOISY


def check_all(w_a: Dmc, w_b: Dmc, seed: int = 0, samples: int = DEFAULT_SAMPLES,
              grid: int = DEFAULT_GRID, tol: float = 1e-7) -> dict:
    """Run the three checks for "w_b is worse than w_a"."""
    return {
        "degraded": check_degraded(w_a, w_b, tol=tol),
        "less_noisy": check_less_noisy(w_a, w_b, samples=samples, seed=seed, grid=grid),
        "more_capable": check_more_capable(w_a, w_b, grid=grid, seed=seed, samples=samples),
    }


def strongest_relation(reports: dict) -> Optional[str]:
    """Name of the strongest non-refuted relation, or None."""
    if reports["degraded"].holds == PROVED:
        return "degraded"
    for name in ("less_noisy", "more_capable"):
        if reports[name].plausible:
            return name
    return None
