"""Downward-closed convex rate regions in the nonnegative quadrant."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

NEG_TOL = 1e-12
COLLINEAR_TOL = 1e-13


@dataclass(frozen=True)
class RatePoint:
    r1: float
    r2: float

    def __post_init__(self):
        for name in ("r1", "r2"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} is not finite: {v}")
            object.__setattr__(self, name, max(v, 0.0))

    def as_tuple(self) -> tuple:
        return (self.r1, self.r2)


def constraint_vertices(r1_max: float, r2_max: float, sum_max: float = math.inf) -> list:
    """Corner points of {r1 <= a, r2 <= b, r1 + r2 <= s} with bounds clamped at 0."""
    a = max(float(r1_max), 0.0)
    b = max(float(r2_max), 0.0)
    s = max(float(sum_max), 0.0)
    if not math.isfinite(a):
        a = s
    if not math.isfinite(b):
        b = s
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("region is unbounded")
    if s >= a + b:
        return [(a, b)]
    bb, aa = min(b, s), min(a, s)
    return [(0.0, bb), (s - bb, bb), (aa, s - aa), (aa, 0.0)]


def constraint_support(r1_max: float, r2_max: float, sum_max: float, lam: float) -> float:
    """Support of the constraint polygon without building a region."""
    pts = constraint_vertices(r1_max, r2_max, sum_max)
    if math.isinf(lam):
        return max(p[1] for p in pts)
    return max(p[0] + lam * p[1] for p in pts)


def _frontier(pts: np.ndarray) -> np.ndarray:
    """Upper-right concave chain of the downward closure of pts.

    Returns vertices starting at (0, ymax) and ending on r1 = xmax, r1
    ascending, with collinear and dominated points removed. The axis
    projections are implied.
    """
    if pts.size == 0:
        return np.zeros((1, 2))
    xmax = float(pts[:, 0].max())
    ymax = float(pts[:, 1].max())
    cand = np.vstack([pts, [[0.0, ymax], [xmax, 0.0]]])
    order = np.lexsort((-cand[:, 1], cand[:, 0]))
    cand = cand[order]
    chain: list = []
    for p in cand:
        if chain and abs(p[0] - chain[-1][0]) <= 0.0:
            continue  # same r1, lower or equal r2 (sorted r2 descending)
        while len(chain) >= 2:
            o, a = chain[-2], chain[-1]
            cross = (a[0] - o[0]) * (p[1] - o[1]) - (a[1] - o[1]) * (p[0] - o[0])
            scale = max(1.0, abs(a[0] - o[0]) + abs(p[1] - o[1]))
            if cross >= -COLLINEAR_TOL * scale:
                chain.pop()
            else:
                break
        chain.append(p)
    out = np.array(chain, dtype=float)
    # Drop any leading/trailing plateau points that are dominated.
    keep = [0]
    for i in range(1, len(out)):
        if out[i, 0] > out[keep[-1], 0] or out[i, 1] > out[keep[-1], 1]:
            keep.append(i)
    out = out[keep]
    if len(out) == 2 and np.allclose(out[0], out[1]):
        out = out[:1]
    return out


class RateRegion:
    """Downward closure of the convex hull of a set of rate points.

    ``hull`` lists the frontier vertices from ``(0, ymax)`` towards the r1 axis.
    An infeasible region (no admissible point at all) has ``feasible=False``
    and contributes nothing to unions.
    """

    def __init__(self, points: Iterable = (), *, feasible: bool = True,
                 meta: Optional[dict] = None, keep_points: bool = True):
        if isinstance(points, np.ndarray):
            arr = np.array(points, dtype=float).reshape(-1, 2)
        else:
            arr = np.array([p.as_tuple() if isinstance(p, RatePoint) else tuple(p)
                            for p in points], dtype=float).reshape(-1, 2)
        if not np.all(np.isfinite(arr)):
            raise ValueError("rate points must be finite")
        arr = np.clip(arr, 0.0, None)
        self.feasible = bool(feasible) and arr.shape[0] > 0
        self.hull = _frontier(arr) if self.feasible else np.zeros((0, 2))
        self.points = arr if keep_points else self.hull.copy()
        self.meta = dict(meta or {})

    @classmethod
    def infeasible(cls, reason: str = "", meta: Optional[dict] = None) -> "RateRegion":
        m = dict(meta or {})
        m["infeasible_reason"] = reason
        return cls((), feasible=False, meta=m)

    @classmethod
    def from_constraints(cls, r1_max: float, r2_max: float, sum_max: float = math.inf,
                         meta: Optional[dict] = None) -> "RateRegion":
        """{r1 <= a, r2 <= b, r1 + r2 <= s} in the quadrant, bounds clamped at 0."""
        return cls(constraint_vertices(r1_max, r2_max, sum_max), meta=meta)

    @classmethod
    def union(cls, regions: Iterable["RateRegion"], meta: Optional[dict] = None,
              keep_points: bool = False) -> "RateRegion":
        chunks = [r.hull for r in regions if r.feasible]
        if not chunks:
            return cls.infeasible("no feasible member", meta)
        return cls(np.vstack(chunks), meta=meta, keep_points=keep_points)

    def __repr__(self) -> str:
        return f"RateRegion({len(self.hull)} vertices, feasible={self.feasible})"

    @property
    def vertices(self) -> list:
        return [RatePoint(x, y) for x, y in self.hull]

    @property
    def r1_max(self) -> float:
        return float(self.hull[:, 0].max()) if self.feasible else 0.0

    @property
    def r2_max(self) -> float:
        return float(self.hull[:, 1].max()) if self.feasible else 0.0

    def support(self, lam: float) -> float:
        return support(self, lam)

    def polygon(self) -> np.ndarray:
        """Closed polygon vertices (counter-clockwise) including the origin."""
        h = self.hull
        if not self.feasible:
            return np.zeros((0, 2))
        ring = [(0.0, 0.0), (float(h[-1, 0]), 0.0)]
        ring += [tuple(v) for v in h[::-1]]
        ring.append((0.0, float(h[0, 1])))
        out = []
        for v in ring:
            if not out or abs(v[0] - out[-1][0]) > 0 or abs(v[1] - out[-1][1]) > 0:
                out.append(v)
        if len(out) > 1 and out[0] == out[-1]:
            out.pop()
        return np.array(out, dtype=float)

    def contains(self, point, tol: float = 1e-9) -> bool:
        x, y = (point.as_tuple() if isinstance(point, RatePoint) else point)
        if not self.feasible:
            return False
        if x < -tol or y < -tol:
            return False
        if x > self.r1_max + tol or y > self.r2_max + tol:
            return False
        h = self.hull
        for i in range(len(h) - 1):
            (x0, y0), (x1, y1) = h[i], h[i + 1]
            nx, ny = y0 - y1, x1 - x0
            norm = math.hypot(nx, ny)
            if norm == 0:
                continue
            if (nx * (x - x0) + ny * (y - y0)) / norm > tol:
                return False
        return True

    def distance_to(self, point) -> float:
        """Euclidean distance from a point to the region (0 inside)."""
        if self.contains(point, tol=0.0):
            return 0.0
        poly = self.polygon()
        p = np.asarray(point, dtype=float)
        if len(poly) == 1:
            return float(np.linalg.norm(p - poly[0]))
        best = math.inf
        for i in range(len(poly)):
            a, b = poly[i], poly[(i + 1) % len(poly)]
            ab = b - a
            den = float(ab @ ab)
            t = 0.0 if den == 0 else min(max(float((p - a) @ ab) / den, 0.0), 1.0)
            best = min(best, float(np.linalg.norm(p - (a + t * ab))))
        return best

    def is_subset_of(self, other: "RateRegion", tol: float = 1e-9) -> bool:
        if not self.feasible:
            return True
        return all(other.contains(v, tol) for v in self.hull)

    def to_rows(self) -> list:
        return [(float(x), float(y), i) for i, (x, y) in enumerate(self.hull)]


def support(region: RateRegion, lam: float) -> float:
    """max over the region of r1 + lam * r2 (lam = inf gives max r2)."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if not region.feasible:
        return 0.0
    h = region.hull
    if math.isinf(lam):
        return float(h[:, 1].max())
    return float((h[:, 0] + lam * h[:, 1]).max())


def hausdorff(a: RateRegion, b: RateRegion) -> float:
    """Hausdorff distance between two regions (exact for convex polygons)."""
    if not (a.feasible and b.feasible):
        raise ValueError("Hausdorff distance needs two feasible regions")
    d_ab = max(b.distance_to(v) for v in a.polygon())
    d_ba = max(a.distance_to(v) for v in b.polygon())
    return max(d_ab, d_ba)


SWEEP_LAMBDAS: tuple = (0.0,) + tuple(float(2.0 ** k) for k in np.linspace(-3, 3, 14)) + (math.inf,)


def support_gap(inner: RateRegion, outer: RateRegion,
                lambdas: Optional[Sequence[float]] = None) -> float:
    """Largest excess of inner's support over outer's across directions.

    The default direction set is the search sweep plus every edge normal of
    both hulls, which makes the check exact for polygons.
    """
    if lambdas is None:
        lams = set(SWEEP_LAMBDAS)
        for reg in (inner, outer):
            h = reg.hull
            for i in range(len(h) - 1):
                dx = h[i + 1, 0] - h[i, 0]
                dy = h[i, 1] - h[i + 1, 1]
                if dx > 0 and dy > 0:
                    lams.add(float(dx / dy))
        lambdas = sorted(lams)
    return max(support(inner, l) - support(outer, l) for l in lambdas)
