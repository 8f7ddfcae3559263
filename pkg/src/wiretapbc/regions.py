"""Rate-region evaluators and auxiliary-distribution search.

Every bound in this module has the shape ``{R1 <= a, R2 <= b, R1 + R2 <= s}``
for a fixed auxiliary joint law, so a per-joint evaluation reduces to three
numbers (each the minimum over the relevant constraints, clamped at 0).
Unions over auxiliary laws are approximated by seeded Dirichlet sampling
followed by hill-climbing of the support function in a fixed set of
directions.

Evaluation is batched: a stack of joint tables with a leading batch axis is
pushed through the same formulas with numpy, which is what makes the search
affordable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .hull import SWEEP_LAMBDAS, RateRegion
from .ordering import PROVED, check_degraded, check_less_noisy
from .probcore import (MAX_TABLE_ENTRIES, ZERO_FLOOR, CapExceededError, JointPmf,
                       ProbabilityError, WiretapBc, product_wbc, simplex_grid)

DEFAULT_BUDGET = 400
DEFAULT_REFINE_ITERS = 120
DEFAULT_PROPOSALS = 16
DIRICHLET_ALPHAS = (1.0, 0.3, 0.1)
SIDE_TOL = 1e-12
FACTOR_TOL = 1e-9
IMPROVE_TOL = 1e-13
MIN_STEP = 1e-12
DETERMINISTIC_GRID_CAP = 500_000
BATCH_ENTRY_CAP = 4_000_000
SEARCH_ENTRY_CAP = 2 ** 25  # joint-table entries held across all stored samples
OUTPUT_AXES = ("Y1", "Y2", "Z")

INNER_AXES = ("T", "Q", "U1", "U2", "X")
OUTER_COR_AXES = ("T", "V1", "V2", "U1", "U2", "X")
OUTER_THM1_AXES = ("T", "V1", "V2", "U1", "U2", "S1", "S2", "X")


class PremiseError(ValueError):
    """A capacity theorem was invoked on a channel that fails its premises."""

    def __init__(self, message: str, failed: Sequence[str] = ()):
        super().__init__(message)
        self.failed = list(failed)


class FactorizationError(ValueError):
    """A joint law does not respect the required conditional independences."""


# ---------------------------------------------------------------------------
# batched joint tables


class BatchJoint:
    """A stack of joint pmfs sharing named axes; ``table[m]`` is member m."""

    def __init__(self, axes: Sequence[str], table: np.ndarray):
        self.axes = tuple(axes)
        self.table = table
        self._h: dict = {}

    @classmethod
    def single(cls, joint: JointPmf) -> "BatchJoint":
        return cls(joint.axes, joint.table[None, ...])

    @property
    def size(self) -> int:
        return self.table.shape[0]

    def entropy(self, names: Sequence[str]) -> np.ndarray:
        key = frozenset(names)
        hit = self._h.get(key)
        if hit is None:
            if not key:
                hit = np.zeros(self.size)
            else:
                drop = tuple(i + 1 for i, a in enumerate(self.axes) if a not in key)
                t = self.table.sum(axis=drop) if drop else self.table
                t = t.reshape(t.shape[0], -1)
                safe = np.where(t > ZERO_FLOOR, t, 1.0)
                hit = -(np.where(t > ZERO_FLOOR, t * np.log2(safe), 0.0)).sum(axis=1)
            self._h[key] = hit
        return hit

    def mi(self, a: str, b: str, c: str = "") -> np.ndarray:
        """I(A;B|C) for space-separated axis groups, clamped at 0."""
        A, B, C = a.split(), b.split(), c.split()
        v = (self.entropy(A + C) + self.entropy(B + C) - self.entropy(A + B + C)
             - self.entropy(C))
        return np.maximum(v, 0.0)

    def marginal(self, names: Sequence[str]) -> "BatchJoint":
        names = tuple(names)
        idx = [self.axes.index(n) for n in names]
        drop = tuple(i + 1 for i in range(len(self.axes)) if i not in idx)
        t = self.table.sum(axis=drop) if drop else self.table
        kept = [i for i in range(len(self.axes)) if i in idx]
        perm = [0] + [kept.index(i) + 1 for i in idx]
        return BatchJoint(names, np.transpose(t, perm))

    def attach(self, ch: WiretapBc, x_axis: str = "X",
               names: Sequence[str] = OUTPUT_AXES) -> "BatchJoint":
        xi = self.axes.index(x_axis)
        if self.table.shape[xi + 1] != ch.input_size:
            raise ProbabilityError(f"axis {x_axis} has size {self.table.shape[xi + 1]}, "
                                   f"channel input size is {ch.input_size}")
        kern = ch.output_kernel()
        letters = "abcdefghijklmnopqrstuvw"
        src = letters[: len(self.axes)]
        out = "xyz"
        t = np.einsum(f"M{src},{src[xi]}{out}->M{src}{out}", self.table, kern)
        return BatchJoint(self.axes + tuple(names), t)


def _with_outputs(ch: WiretapBc, bj: BatchJoint) -> BatchJoint:
    outs = int(np.prod([c.output_size for c in (ch.ch_y1, ch.ch_y2, ch.ch_z)]))
    per = int(np.prod(bj.table.shape[1:])) * outs
    if per > MAX_TABLE_ENTRIES:
        raise CapExceededError(f"joint with outputs would have {per} entries "
                               f"(cap {MAX_TABLE_ENTRIES})")
    return bj.attach(ch)


# ---------------------------------------------------------------------------
# bound formulas (batched); each returns (a, b, s, feasible, terms)


def _inner(j: BatchJoint):
    I = j.mi
    side = I("U2", "Y2", "T Q") + I("U1", "Y1", "Q T") - I("U1", "U2", "T Q")
    a = I("Q U1", "Y1", "T") - I("Q U1", "Z", "T")
    b = I("Q U2", "Y2", "T") - I("Q U2", "Z", "T")
    common = I("Q U1 U2", "Z", "T") + I("U1", "U2", "T Q")
    s1 = I("U1", "Y1", "T Q") + I("Q U2", "Y2", "T") - common
    s2 = I("U2", "Y2", "T Q") + I("Q U1", "Y1", "T") - common
    s3 = I("Q U1", "Y1", "T") + I("Q U2", "Y2", "T") - common - I("Q", "Z", "T")
    terms = {"r1": a, "r2": b, "sum1": s1, "sum2": s2, "sum3": s3, "side": side}
    return a, b, np.minimum.reduce([s1, s2, s3]), side >= -SIDE_TOL, terms


def _outer_cor(j: BatchJoint):
    I = j.mi
    c1 = I("U1", "Y1", "T V1") - I("U1", "Z", "T V1")
    c2 = I("U2", "Y2", "T V2") - I("U2", "Z", "T V2")
    c3 = I("X", "Y2", "T Z V1") + I("U1", "Y1", "T V1") - I("U1", "Z Y2", "T V1")
    c4 = I("X", "Y1", "T Z V2") + I("U2", "Y2", "T V2") - I("U2", "Z Y1", "T V2")
    terms = {"r1": c1, "r2": c2, "sum1": c3, "sum2": c4}
    return c1, c2, np.minimum(c3, c4), np.ones(j.size, bool), terms


def _outer_thm1(j: BatchJoint):
    I = j.mi
    r1 = [
        I("U1", "Y1", "T V1") - I("U1", "Z", "T V1"),
        I("U1", "Y1 Y2", "T V1 V2") - I("U1", "Z", "T V1 V2"),
        I("U1", "Y1", "T V1 U2") - I("U1", "Z", "T V1 U2"),
        I("U1", "Y1 Y2", "T V1 U2 V2") - I("U1", "Z", "T V1 U2 V2"),
    ]
    r2 = [
        I("U2", "Y2", "T V2") - I("U2", "Z", "T V2"),
        I("U2", "Y2 Y1", "T V1 V2") - I("U2", "Z", "T V1 V2"),
        I("U2", "Y2", "T V2 U1") - I("U2", "Z", "T V2 U1"),
        I("U2", "Y2 Y1", "T U1 V1 V2") - I("U2", "Z", "T U1 V1 V2"),
    ]
    sums = [
        I("X", "Y2", "T Z V1") + I("U1 S1", "Y1", "T V1") - I("U1 S1", "Z Y2", "T V1"),
        I("X", "Y2", "T Z V1 V2") + I("U1 S1", "Y1 Y2", "T V1 V2")
        - I("U1 S1", "Z Y2", "T V1 V2"),
        I("X", "Y1", "T Z V2") + I("U2 S2", "Y2", "T V2") - I("U2 S2", "Z Y1", "T V2"),
        I("X", "Y1", "T Z V1 V2") + I("U2 S2", "Y2 Y1", "T V1 V2")
        - I("U2 S2", "Z Y1", "T V1 V2"),
    ]
    terms = {f"c{i + 1}": v for i, v in enumerate(r1 + r2 + sums)}
    return (np.minimum.reduce(r1), np.minimum.reduce(r2), np.minimum.reduce(sums),
            np.ones(j.size, bool), terms)


def _semidet(j: BatchJoint):
    H, I = j.entropy, j.mi
    a = H(["Y1", "Z", "Q"]) - H(["Z", "Q"])
    b = I("U", "Y2", "Q") - I("U", "Z", "Q")
    s = H(["Y1", "Z", "Q", "U"]) - H(["Z", "Q", "U"]) + b
    return a, b, s, np.ones(j.size, bool), {"r1": a, "r2": b, "sum": s}


def _degraded(j: BatchJoint):
    I = j.mi
    a = I("X", "Y1", "T U") - I("X", "Z", "T U")
    b = I("U", "Y2", "T") - I("U", "Z", "T")
    inf = np.full(j.size, np.inf)
    return a, b, inf, np.ones(j.size, bool), {"r1": a, "r2": b}


def _less_noisy(j: BatchJoint):
    # I(X;Y1|ZUT) is taken in the difference form I(X;Y1|UT) - I(X;Z|UT): its
    # value on the physically degraded coupling. Capacity depends only on the
    # channel marginals, while the conditional form would depend on how the
    # outputs happen to be coupled.
    I = j.mi
    b = I("U", "Y2", "T") - I("U", "Z", "T")
    s = I("X", "Y1", "U T") - I("X", "Z", "U T") + b
    inf = np.full(j.size, np.inf)
    return inf, b, s, np.ones(j.size, bool), {"r2": b, "sum": s}


def _deterministic(j: BatchJoint):
    H = j.entropy
    hz = H(["Z"])
    a = H(["Y1", "Z"]) - hz
    b = H(["Y2", "Z"]) - hz
    s = H(["Y1", "Y2", "Z"]) - hz
    return a, b, s, np.ones(j.size, bool), {"H(Y1|Z)": a, "H(Y2|Z)": b, "H(Y1Y2|Z)": s}


def _product(j1: BatchJoint, j2: BatchJoint):
    # Same difference-form convention as _less_noisy for terms conditioned on
    # a component eavesdropper.
    I1, I2 = j1.mi, j2.mi
    own1 = I1("X1", "Y1") - I1("X1", "Z1")
    own2 = I2("X2", "T2") - I2("X2", "Z2")
    cross2 = I2("U2", "Y2") - I2("U2", "Z2")
    cross1 = I1("U1", "T1") - I1("U1", "Z1")
    a = own1 + cross2
    b = own2 + cross1
    s1 = a + I2("X2", "T2", "U2") - I2("X2", "Z2", "U2")
    s2 = b + I1("X1", "Y1", "U1") - I1("X1", "Z1", "U1")
    return a, b, np.minimum(s1, s2), np.ones(j1.size, bool), {"r1": a, "r2": b,
                                                               "sum1": s1, "sum2": s2}


# ---------------------------------------------------------------------------
# polygon helpers on arrays


def _clamped(a, b, s):
    a = np.maximum(np.asarray(a, float), 0.0)
    b = np.maximum(np.asarray(b, float), 0.0)
    s = np.maximum(np.asarray(s, float), 0.0)
    a = np.where(np.isfinite(a), a, s)
    b = np.where(np.isfinite(b), b, s)
    return a, b, s


def batch_support(a, b, s, lam: float) -> np.ndarray:
    """Support of each polygon {r1<=a, r2<=b, r1+r2<=s} in direction lam."""
    a, b, s = _clamped(a, b, s)
    aa, bb = np.minimum(a, s), np.minimum(b, s)
    if math.isinf(lam):
        return bb
    loose = s >= a + b
    # the unused branch may hold 0 * inf when a bound is absent
    with np.errstate(invalid="ignore"):
        cand = np.maximum.reduce([lam * bb, (s - bb) + lam * bb, aa + lam * (s - aa), aa])
        return np.where(loose, a + lam * b, cand)


def batch_vertices(a, b, s) -> np.ndarray:
    """All polygon corners stacked as an (n, 2) array."""
    a, b, s = _clamped(a, b, s)
    aa, bb = np.minimum(a, s), np.minimum(b, s)
    loose = (s >= a + b)[:, None]
    tight = np.stack([np.stack([np.zeros_like(bb), bb], 1), np.stack([s - bb, bb], 1),
                      np.stack([aa, s - aa], 1), np.stack([aa, np.zeros_like(aa)], 1)], 1)
    corner = np.repeat(np.stack([a, b], 1)[:, None, :], 4, axis=1)
    return np.where(loose[:, :, None], corner, tight).reshape(-1, 2)


@dataclass(frozen=True)
class Bounds:
    """Right-hand sides of one per-joint region, before clamping."""

    r1: float
    r2: float
    sum: float = math.inf
    feasible: bool = True
    terms: dict = field(default_factory=dict, compare=False)

    def support(self, lam: float) -> float:
        if not self.feasible:
            return -math.inf
        return float(batch_support([self.r1], [self.r2], [self.sum], lam)[0])

    def vertices(self) -> list:
        if not self.feasible:
            return []
        return [tuple(v) for v in batch_vertices([self.r1], [self.r2], [self.sum])]

    def region(self) -> RateRegion:
        if not self.feasible:
            return RateRegion.infeasible(
                "side condition I(U2;Y2|TQ) + I(U1;Y1|QT) >= I(U1;U2|TQ) fails",
                meta={"terms": self.terms})
        return RateRegion.from_constraints(self.r1, self.r2, self.sum,
                                           meta={"terms": self.terms})


def _single(result) -> Bounds:
    a, b, s, ok, terms = result
    return Bounds(float(a[0]), float(b[0]), float(s[0]), bool(ok[0]),
                  {k: float(v[0]) for k, v in terms.items()})


# ---------------------------------------------------------------------------
# per-joint public evaluators


def _require_axes(joint: JointPmf, axes: Sequence[str]) -> JointPmf:
    if set(joint.axes) != set(axes):
        raise ProbabilityError(f"joint axes {joint.axes} do not match expected {tuple(axes)}")
    return joint if joint.axes == tuple(axes) else joint.marginal(tuple(axes))


def _evaluate_single(ch: WiretapBc, joint: JointPmf, axes, formula) -> Bounds:
    bj = BatchJoint.single(_require_axes(joint, axes))
    return _single(formula(_with_outputs(ch, bj)))


def inner_bounds(ch: WiretapBc, joint: JointPmf) -> Bounds:
    return _evaluate_single(ch, joint, INNER_AXES, _inner)


def outer_cor_bounds(ch: WiretapBc, joint: JointPmf) -> Bounds:
    return _evaluate_single(ch, joint, OUTER_COR_AXES, _outer_cor)


def outer_thm1_bounds(ch: WiretapBc, joint: JointPmf) -> Bounds:
    return _evaluate_single(ch, joint, OUTER_THM1_AXES, _outer_thm1)


def semidet_bounds(ch: WiretapBc, joint: JointPmf) -> Bounds:
    return _evaluate_single(ch, joint, ("Q", "U", "X"), _semidet)


def degraded_bounds(ch: WiretapBc, joint: JointPmf) -> Bounds:
    return _evaluate_single(ch, joint, ("T", "U", "X"), _degraded)


def less_noisy_bounds(ch: WiretapBc, joint: JointPmf) -> Bounds:
    return _evaluate_single(ch, joint, ("T", "U", "X"), _less_noisy)


def deterministic_bounds(ch: WiretapBc, px) -> Bounds:
    return _evaluate_single(ch, JointPmf(("X",), px), ("X",), _deterministic)


def check_independent(joint: JointPmf, left: Sequence[str], right: Sequence[str],
                      tol: float = FACTOR_TOL) -> None:
    """Raise FactorizationError unless P(left, right) = P(left) P(right)."""
    pl = joint.marginal(tuple(left)).table
    pr = joint.marginal(tuple(right)).table
    pj = joint.marginal(tuple(left) + tuple(right)).table
    gap = float(np.max(np.abs(pj - np.multiply.outer(pl, pr))))
    if gap > tol:
        raise FactorizationError(
            f"joint does not factor as P({','.join(left)}) P({','.join(right)}): "
            f"max deviation {gap:.3g}")


def _product_batch(bc1: WiretapBc, bc2: WiretapBc, bj: BatchJoint):
    j1 = bj.marginal(("U1", "X1")).attach(bc1, "X1", ("Y1", "T1", "Z1"))
    j2 = bj.marginal(("U2", "X2")).attach(bc2, "X2", ("Y2", "T2", "Z2"))
    return _product(j1, j2)


def product_bounds(bc1: WiretapBc, bc2: WiretapBc, joint: JointPmf,
                   validate: bool = True) -> Bounds:
    """Per-joint bounds for the product of two inversely ordered components.

    User 1 observes ``(bc1.ch_y1, bc2.ch_y1)`` and user 2 observes
    ``(bc1.ch_y2, bc2.ch_y2)``; component eavesdroppers are ``ch_z``.
    """
    joint = _require_axes(joint, ("U1", "X1", "U2", "X2"))
    if validate:
        check_independent(joint, ("U1", "X1"), ("U2", "X2"))
    return _single(_product_batch(bc1, bc2, BatchJoint.single(joint)))


def eval_inner(ch: WiretapBc, joint: JointPmf) -> RateRegion:
    """Inner-bound polygon for one (T, Q, U1, U2, X) law, or an infeasible region."""
    return inner_bounds(ch, joint).region()


def eval_outer_cor(ch: WiretapBc, joint: JointPmf) -> RateRegion:
    """Four-constraint outer-bound polygon for one (T, V1, V2, U1, U2, X) law."""
    return outer_cor_bounds(ch, joint).region()


def eval_outer_thm1(ch: WiretapBc, joint: JointPmf) -> RateRegion:
    """Twelve-constraint outer-bound polygon for one (T, V1, V2, U1, U2, S1, S2, X) law."""
    return outer_thm1_bounds(ch, joint).region()


def eval_product(bc1: WiretapBc, bc2: WiretapBc, joint: JointPmf) -> RateRegion:
    return product_bounds(bc1, bc2, joint).region()


# ---------------------------------------------------------------------------
# auxiliary specifications


@dataclass
class AuxSpec:
    """Alphabet sizes and sampling factorisation of an auxiliary joint law.

    ``factors`` is an ordered list of ``(children, parents)``; the joint is
    the product of ``P(children | parents)`` in that order, so any
    conditional independence implied by omitted parents is enforced by
    construction.
    """

    cardinalities: Dict[str, int]
    factors: List[Tuple[Tuple[str, ...], Tuple[str, ...]]]

    def __post_init__(self):
        seen: list = []
        for children, parents in self.factors:
            for p in parents:
                if p not in seen:
                    raise ValueError(f"parent {p!r} used before it is sampled")
            for c in children:
                if c in seen:
                    raise ValueError(f"axis {c!r} sampled twice")
                seen.append(c)
        for name in seen:
            k = self.cardinalities.get(name)
            if k is None or int(k) < 1:
                raise ValueError(f"cardinality of {name!r} must be a positive integer")
        self.cardinalities = {k: int(v) for k, v in self.cardinalities.items()}

    @property
    def axes(self) -> tuple:
        return tuple(c for children, _ in self.factors for c in children)

    def table_size(self) -> int:
        return int(np.prod([self.cardinalities[a] for a in self.axes]))

    def kernel_shapes(self) -> list:
        shapes = []
        for children, parents in self.factors:
            rows = int(np.prod([self.cardinalities[p] for p in parents])) if parents else 1
            cols = int(np.prod([self.cardinalities[c] for c in children]))
            shapes.append((rows, cols))
        return shapes

    def build_batch(self, kernels: Sequence[np.ndarray]) -> BatchJoint:
        """Assemble joint tables from stacked kernels of shape (M, rows, cols)."""
        letters = "abcdefghijklmnopqrstuvw"
        axes: list = []
        m = kernels[0].shape[0]
        table = np.ones((m,))
        for (children, parents), k in zip(self.factors, kernels):
            shape = (m,) + tuple(self.cardinalities[p] for p in parents) + tuple(
                self.cardinalities[c] for c in children)
            k = np.asarray(k).reshape(shape)
            src = letters[: len(axes)]
            ksub = "".join(letters[axes.index(p)] for p in parents)
            new = letters[len(axes): len(axes) + len(children)]
            table = np.einsum(f"M{src},M{ksub}{new}->M{src}{new}", table, k)
            axes.extend(children)
        return BatchJoint(tuple(axes), table)

    def build(self, kernels: Sequence[np.ndarray]) -> JointPmf:
        bj = self.build_batch([np.asarray(k)[None, ...] for k in kernels])
        return JointPmf(bj.axes, bj.table[0], validate=False)

    def sample(self, rng: np.random.Generator, alpha: Optional[float] = None) -> list:
        """One random law as a list of row-stochastic kernels."""
        if alpha is None:
            alpha = DIRICHLET_ALPHAS[int(rng.integers(len(DIRICHLET_ALPHAS)))]
        out = []
        for rows, cols in self.kernel_shapes():
            k = rng.dirichlet(np.full(cols, alpha), size=rows)
            bad = ~np.isfinite(k).all(axis=1) | (k.sum(axis=1) <= 0)
            if np.any(bad):
                k[bad] = 0.0
                k[bad, rng.integers(cols, size=int(bad.sum()))] = 1.0
            out.append(k / k.sum(axis=1, keepdims=True))
        return out


def _cards(defaults: Dict[str, int], overrides: Optional[Dict[str, int]]) -> Dict[str, int]:
    c = dict(defaults)
    if overrides:
        unknown = set(overrides) - set(defaults)
        if unknown:
            raise ValueError(f"unknown auxiliary names {sorted(unknown)}")
        c.update({k: int(v) for k, v in overrides.items()})
    return c


def inner_spec(x_size: int, cards: Optional[Dict[str, int]] = None) -> AuxSpec:
    c = _cards({"T": 1, "Q": 2, "U1": 2, "U2": 2, "X": x_size}, cards)
    return AuxSpec(c, [(("T",), ()), (("Q",), ("T",)), (("U1", "U2"), ("T", "Q")),
                       (("X",), ("T", "Q", "U1", "U2"))])


def outer_cor_spec(x_size: int, cards: Optional[Dict[str, int]] = None) -> AuxSpec:
    c = _cards({"T": 1, "V1": 2, "V2": 2, "U1": 2, "U2": 2, "X": x_size}, cards)
    return AuxSpec(c, [(("T",), ()), (("V1", "V2"), ("T",)), (("U1", "U2"), ("T", "V1", "V2")),
                       (("X",), ("T", "V1", "V2", "U1", "U2"))])


def outer_thm1_spec(x_size: int, cards: Optional[Dict[str, int]] = None) -> AuxSpec:
    c = _cards({"T": 1, "V1": 2, "V2": 2, "U1": 2, "U2": 2, "S1": 2, "S2": 2, "X": x_size},
               cards)
    return AuxSpec(c, [(("T",), ()), (("V1", "V2"), ("T",)),
                       (("U1", "U2", "S1", "S2"), ("T", "V1", "V2")),
                       (("X",), ("U1", "U2", "S1", "S2"))])


def tux_spec(x_size: int, cards: Optional[Dict[str, int]] = None, *,
             x_given_u_only: bool, t_name: str = "T") -> AuxSpec:
    """Spec for the (T, U, X) families; optionally X depends on U alone."""
    c = _cards({t_name: 1, "U": 4, "X": x_size}, cards)
    x_parents = ("U",) if x_given_u_only else (t_name, "U")
    return AuxSpec(c, [((t_name,), ()), (("U",), (t_name,)), (("X",), x_parents)])


def product_spec(x1_size: int, x2_size: int, cards: Optional[Dict[str, int]] = None) -> AuxSpec:
    c = _cards({"U1": 3, "U2": 3, "X1": x1_size, "X2": x2_size}, cards)
    return AuxSpec(c, [(("U1",), ()), (("X1",), ("U1",)), (("U2",), ()), (("X2",), ("U2",))])


# ---------------------------------------------------------------------------
# search engine

Evaluator = Callable[[List[np.ndarray]], Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]


def _chunked(evaluate: Evaluator, kernels: List[np.ndarray], chunk: int):
    n = kernels[0].shape[0]
    outs = [evaluate([k[i:i + chunk] for k in kernels]) for i in range(0, n, chunk)]
    return tuple(np.concatenate([o[t] for o in outs]) for t in range(4))


def _propose(base: List[np.ndarray], rng: np.random.Generator, step: float,
             m: int) -> List[np.ndarray]:
    """m perturbations of one law, each moving mass between two entries of one row.

    A quarter of the proposals move an entry's whole mass, which lets a climb
    land exactly on deterministic rows instead of approaching them
    geometrically.
    """
    shapes = [k.shape for k in base]
    weights = np.array([r * (c - 1) for r, c in shapes], dtype=float)
    out = [np.repeat(k[None], m, axis=0) for k in base]
    if weights.sum() == 0:
        return out
    fs = rng.choice(len(base), size=m, p=weights / weights.sum())
    scales = step * 0.5 ** rng.integers(0, 4, size=m)
    scales = np.where(rng.random(m) < 0.25, 1.0, scales)
    for p, f in enumerate(fs):
        rows, cols = shapes[f]
        r = int(rng.integers(rows))
        row = out[f][p, r]
        i = int(rng.integers(cols))
        if row[i] <= 0:
            i = int(np.argmax(row))
        j = int(rng.integers(cols - 1))
        j = j + 1 if j >= i else j
        amt = row[i] * min(scales[p], 1.0)
        row[i] -= amt
        row[j] += amt
    return out


@dataclass
class _Climb:
    lam: float
    kernels: List[np.ndarray]
    value: float
    rng: np.random.Generator
    step: float = 0.5
    done: bool = False


@dataclass
class SearchResult:
    region: RateRegion
    best: Dict[float, Tuple[List[np.ndarray], float]]
    evaluations: int


def _search(evaluate: Evaluator, spec: AuxSpec, budget: int, seed: int, refine_iters: int,
            lambdas: Sequence[float] = SWEEP_LAMBDAS, proposals: int = DEFAULT_PROPOSALS,
            meta: Optional[dict] = None) -> SearchResult:
    if budget < 1:
        raise ValueError("budget must be at least 1")
    held = budget * spec.table_size()
    if held > SEARCH_ENTRY_CAP:
        raise CapExceededError(f"budget {budget} with {spec.table_size()}-entry joints holds "
                               f"{held} entries (cap {SEARCH_ENTRY_CAP}); lower the budget "
                               "or the cardinalities")
    per = spec.table_size() * 64
    chunk = max(1, BATCH_ENTRY_CAP // max(per, 1))
    # One seed per sample index, so a larger budget extends the same draws.
    samples = [spec.sample(np.random.default_rng(np.random.SeedSequence((seed, i))))
               for i in range(budget)]
    stacked = [np.stack([s[f] for s in samples]) for f in range(len(spec.factors))]
    a, b, s, ok = _chunked(evaluate, stacked, chunk)
    verts = [batch_vertices(a[ok], b[ok], s[ok])]
    evals = budget

    climbs: List[_Climb] = []
    for li, lam in enumerate(lambdas):
        vals = np.where(ok, batch_support(a, b, s, lam), -np.inf)
        # Running records: the records of a prefix are records of any longer
        # run, so refining every record keeps the union monotone in budget.
        best = -np.inf
        for idx in range(budget):
            if vals[idx] > best + 1e-15:
                best = vals[idx]
                rng = np.random.default_rng(np.random.SeedSequence((seed, 7919, li, idx)))
                climbs.append(_Climb(lam, samples[idx], float(vals[idx]), rng))

    for _ in range(refine_iters if climbs else 0):
        live = [c for c in climbs if not c.done]
        if not live:
            break
        props = [_propose(c.kernels, c.rng, c.step, proposals) for c in live]
        batch = [np.concatenate([p[f] for p in props]) for f in range(len(spec.factors))]
        pa, pb, ps, pok = _chunked(evaluate, batch, chunk)
        evals += len(live) * proposals
        for ci, c in enumerate(live):
            sl = slice(ci * proposals, (ci + 1) * proposals)
            v = np.where(pok[sl], batch_support(pa[sl], pb[sl], ps[sl], c.lam), -np.inf)
            k = int(np.argmax(v))
            if v[k] > c.value + IMPROVE_TOL:
                c.value = float(v[k])
                c.kernels = [p[k] for p in props[ci]]
            else:
                c.step *= 0.5
                if c.step < MIN_STEP:
                    c.done = True

    best_by_lam: Dict[float, Tuple[List[np.ndarray], float]] = {}
    if climbs:
        final = [np.stack([c.kernels[f] for c in climbs]) for f in range(len(spec.factors))]
        fa, fb, fs, fok = _chunked(evaluate, final, chunk)
        verts.append(batch_vertices(fa[fok], fb[fok], fs[fok]))
        for c in climbs:
            if c.lam not in best_by_lam or c.value > best_by_lam[c.lam][1]:
                best_by_lam[c.lam] = (c.kernels, c.value)
    m = dict(meta or {})
    m.update({"budget": budget, "seed": seed, "refine_iters": refine_iters,
              "evaluations": evals, "climbs": len(climbs)})
    pts = np.vstack(verts)
    if pts.shape[0] == 0:
        return SearchResult(RateRegion.infeasible("no sampled law was feasible", m),
                            best_by_lam, evals)
    return SearchResult(RateRegion(pts, meta=m, keep_points=False), best_by_lam, evals)


BOUND_NAMES = {"inner": "inner", "outer_cor": "outer_cor", "outer-cor": "outer_cor",
               "outer_thm1": "outer_thm1", "outer-thm1": "outer_thm1"}
_BOUND_TABLE = {
    "inner": (inner_spec, _inner, INNER_AXES),
    "outer_cor": (outer_cor_spec, _outer_cor, OUTER_COR_AXES),
    "outer_thm1": (outer_thm1_spec, _outer_thm1, OUTER_THM1_AXES),
}


def _check_cap(spec: AuxSpec, ch: WiretapBc) -> None:
    outs = int(np.prod([c.output_size for c in (ch.ch_y1, ch.ch_y2, ch.ch_z)]))
    size = spec.table_size() * outs
    if size > MAX_TABLE_ENTRIES:
        raise CapExceededError(f"auxiliary cardinalities give a {size}-entry table "
                               f"(cap {MAX_TABLE_ENTRIES})")


def _channel_evaluator(ch: WiretapBc, spec: AuxSpec, formula, axes) -> Evaluator:
    def evaluate(kernels):
        bj = spec.build_batch(kernels)
        if bj.axes != tuple(axes):
            bj = bj.marginal(axes)
        a, b, s, ok, _ = formula(bj.attach(ch))
        return a, b, s, ok
    return evaluate


def search_region(ch: WiretapBc, aux: Optional[AuxSpec] = None, bound: str = "inner",
                  budget: int = DEFAULT_BUDGET, seed: int = 0,
                  refine_iters: int = DEFAULT_REFINE_ITERS,
                  cards: Optional[Dict[str, int]] = None) -> RateRegion:
    """Union over sampled auxiliary laws of one bound's per-joint polygons.

    Outer-bound searches approximate the outer region from below; the
    region metadata says so.
    """
    kind = BOUND_NAMES.get(bound)
    if kind is None:
        raise ValueError(f"unknown bound {bound!r}")
    spec_fn, formula, axes = _BOUND_TABLE[kind]
    spec = aux if aux is not None else spec_fn(ch.input_size, cards)
    if spec.cardinalities.get("X") != ch.input_size:
        raise ValueError("AuxSpec X cardinality differs from the channel input size")
    if set(spec.axes) != set(axes):
        raise ValueError(f"AuxSpec axes {spec.axes} do not match {axes}")
    _check_cap(spec, ch)
    meta = {"bound": kind, "cards": dict(spec.cardinalities),
            "approximation": "sampled union (from below)"}
    ev = _channel_evaluator(ch, spec, formula, axes)
    return _search(ev, spec, budget, seed, refine_iters, meta=meta).region


# ---------------------------------------------------------------------------
# specialised capacity regions


def _premise(failed: list, ok: bool, label: str) -> None:
    if not ok:
        failed.append(label)


def _raise_if(failed: list, theorem: str) -> None:
    if failed:
        raise PremiseError(f"{theorem} premises fail: " + "; ".join(failed), failed)


def premises_deterministic(ch: WiretapBc) -> dict:
    failed: list = []
    _premise(failed, ch.ch_y1.is_deterministic(), "Y1 is not deterministic")
    _premise(failed, ch.ch_y2.is_deterministic(), "Y2 is not deterministic")
    return {"failed": failed, "reports": {}}


def premises_semidet(ch: WiretapBc, seed: int = 0) -> dict:
    failed: list = []
    _premise(failed, ch.ch_y1.is_deterministic(), "Y1 is not deterministic")
    ln = check_less_noisy(ch.ch_y2, ch.ch_z, seed=seed)
    _premise(failed, ln.plausible, "Y2 is not less noisy than Z")
    return {"failed": failed, "reports": {"y2_less_noisy_z": ln.status}}


def premises_degraded(ch: WiretapBc, seed: int = 0) -> dict:
    failed: list = []
    d = check_degraded(ch.ch_y1, ch.ch_y2)
    _premise(failed, d.holds == PROVED, "Y2 is not degraded with respect to Y1")
    l1 = check_less_noisy(ch.ch_y1, ch.ch_z, seed=seed)
    l2 = check_less_noisy(ch.ch_y2, ch.ch_z, seed=seed)
    _premise(failed, l1.plausible, "Y1 is not less noisy than Z")
    _premise(failed, l2.plausible, "Y2 is not less noisy than Z")
    return {"failed": failed, "reports": {"y2_degraded_y1": d.status,
                                          "y1_less_noisy_z": l1.status,
                                          "y2_less_noisy_z": l2.status}}


def premises_less_noisy(ch: WiretapBc, seed: int = 0) -> dict:
    failed: list = []
    ln = check_less_noisy(ch.ch_y1, ch.ch_y2, seed=seed)
    _premise(failed, ln.plausible, "Y1 is not less noisy than Y2")
    d = check_degraded(ch.ch_y1, ch.ch_z)
    _premise(failed, d.holds == PROVED, "Z is not degraded with respect to Y1")
    return {"failed": failed, "reports": {"y1_less_noisy_y2": ln.status,
                                          "z_degraded_y1": d.status}}


def premises_product(bc1: WiretapBc, bc2: WiretapBc, seed: int = 0) -> dict:
    failed: list = []
    reports = {}
    for tag, bc, strong, weak in (("1", bc1, bc1.ch_y1, bc1.ch_y2),
                                  ("2", bc2, bc2.ch_y2, bc2.ch_y1)):
        ln = check_less_noisy(strong, weak, seed=seed)
        d = check_degraded(strong, bc.ch_z)
        lz = check_less_noisy(weak, bc.ch_z, seed=seed)
        _premise(failed, ln.plausible, f"component {tag}: strong user not less noisy than weak")
        _premise(failed, d.holds == PROVED,
                 f"component {tag}: eavesdropper not degraded with respect to strong user")
        _premise(failed, lz.plausible,
                 f"component {tag}: weak user not less noisy than eavesdropper")
        reports[f"component{tag}"] = {"strong_less_noisy_weak": ln.status,
                                      "z_degraded_strong": d.status,
                                      "weak_less_noisy_z": lz.status}
    return {"failed": failed, "reports": reports}


def capacity_deterministic(ch: WiretapBc, grid: int = 64) -> RateRegion:
    """Exact region for deterministic legitimate channels, swept over a P_X grid."""
    prem = premises_deterministic(ch)
    if prem["failed"]:
        raise PremiseError("channel is not deterministic: " + "; ".join(prem["failed"]),
                           prem["failed"])
    k = ch.input_size
    n_pts = math.comb(grid + k - 1, k - 1)
    if n_pts > DETERMINISTIC_GRID_CAP:
        raise CapExceededError(f"simplex grid would have {n_pts} points "
                               f"(cap {DETERMINISTIC_GRID_CAP})")
    px = simplex_grid(k, grid)
    a, b, s, _, _ = _deterministic(BatchJoint(("X",), px).attach(ch))
    return RateRegion(batch_vertices(a, b, s), keep_points=False,
                      meta={"theorem": "deterministic", "grid": grid, "points": n_pts})


def _capacity_search(ch, spec, formula, axes, budget, seed, refine_iters, meta) -> RateRegion:
    _check_cap(spec, ch)
    ev = _channel_evaluator(ch, spec, formula, axes)
    return _search(ev, spec, budget, seed, refine_iters, meta=meta).region


def _no_premises() -> dict:
    return {"failed": [], "reports": {"note": "premise checks skipped by caller"}}


def capacity_semidet(ch: WiretapBc, cards: Optional[Dict[str, int]] = None,
                     budget: int = DEFAULT_BUDGET, seed: int = 0,
                     refine_iters: int = DEFAULT_REFINE_ITERS,
                     check_premises: bool = True) -> RateRegion:
    """Semi-deterministic channel with an eavesdropper weaker than Y2."""
    prem = premises_semidet(ch, seed) if check_premises else _no_premises()
    _raise_if(prem["failed"], "semi-deterministic capacity")
    spec = tux_spec(ch.input_size, cards, x_given_u_only=True, t_name="Q")
    return _capacity_search(ch, spec, _semidet, ("Q", "U", "X"), budget, seed, refine_iters,
                            {"theorem": "semi-deterministic", "premises": prem["reports"]})


def capacity_degraded(ch: WiretapBc, cards: Optional[Dict[str, int]] = None,
                      budget: int = DEFAULT_BUDGET, seed: int = 0,
                      refine_iters: int = DEFAULT_REFINE_ITERS,
                      check_premises: bool = True) -> RateRegion:
    """Degraded legitimate users, both less noisy than the eavesdropper."""
    prem = premises_degraded(ch, seed) if check_premises else _no_premises()
    _raise_if(prem["failed"], "degraded capacity")
    spec = tux_spec(ch.input_size, cards, x_given_u_only=False)
    return _capacity_search(ch, spec, _degraded, ("T", "U", "X"), budget, seed, refine_iters,
                            {"theorem": "degraded", "premises": prem["reports"]})


def capacity_less_noisy(ch: WiretapBc, cards: Optional[Dict[str, int]] = None,
                        budget: int = DEFAULT_BUDGET, seed: int = 0,
                        refine_iters: int = DEFAULT_REFINE_ITERS,
                        check_premises: bool = True) -> RateRegion:
    """Y1 less noisy than Y2 with Z degraded with respect to Y1."""
    prem = premises_less_noisy(ch, seed) if check_premises else _no_premises()
    _raise_if(prem["failed"], "less-noisy capacity")
    spec = tux_spec(ch.input_size, cards, x_given_u_only=True)
    return _capacity_search(ch, spec, _less_noisy, ("T", "U", "X"), budget, seed, refine_iters,
                            {"theorem": "less-noisy", "premises": prem["reports"]})


def capacity_product(bc1: WiretapBc, bc2: WiretapBc, cards: Optional[Dict[str, int]] = None,
                     budget: int = DEFAULT_BUDGET, seed: int = 0,
                     refine_iters: int = DEFAULT_REFINE_ITERS,
                     check_premises: bool = True) -> RateRegion:
    """Product of two inversely ordered less-noisy components."""
    product_wbc(bc1, bc2)  # enforces the product alphabet cap
    prem = premises_product(bc1, bc2, seed) if check_premises else _no_premises()
    _raise_if(prem["failed"], "product capacity")
    spec = product_spec(bc1.input_size, bc2.input_size, cards)

    def evaluate(kernels):
        a, b, s, ok, _ = _product_batch(bc1, bc2, spec.build_batch(kernels))
        return a, b, s, ok

    meta = {"theorem": "product", "premises": prem["reports"]}
    return _search(evaluate, spec, budget, seed, refine_iters, meta=meta).region


def less_noisy_parametric(ch: WiretapBc, xs: Sequence[float]) -> RateRegion:
    """Less-noisy region restricted to U ~ Bern(1/2), X = U xor Bern(x), binary input."""
    if ch.input_size != 2:
        raise ValueError("parametric family needs a binary input")
    verts = []
    for x in xs:
        pux = np.array([[1 - x, x], [x, 1 - x]]) * 0.5
        j = JointPmf(("T", "U", "X"), pux[None, :, :])
        b = less_noisy_bounds(ch, j)
        verts.extend(RateRegion.from_constraints(b.r1, b.r2, b.sum).hull.tolist())
    return RateRegion(verts, keep_points=False)


def swap_region(region: RateRegion) -> RateRegion:
    """Mirror a region across r1 = r2 (used when users are relabelled)."""
    if not region.feasible:
        return region
    return RateRegion(region.hull[:, ::-1].copy(), meta=dict(region.meta), keep_points=False)
