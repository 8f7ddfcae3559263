"""Closed-form secrecy region of the BEC(e)/BSC(p2) broadcast channel with a
BSC(p) eavesdropper, plus numerical checks of its convexity and of the
series inequalities used in its converse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .hull import RateRegion
from .probcore import WiretapBc, binary_entropy, binary_entropy_array, make_bec, make_bsc

EDGE_TOL = 1e-12
NEG_TOL = 1e-12
CONVEXITY_TOL = 1e-9
SIGN_FLOOR = 1e-6
SIDE_CONDITION_FORM = "convexity form: a^2 + a2^2 <= 1, i.e. 1 - 4p(1-p) <= 4p2(1-p2)"
SIDE_CONDITION_NOTE = ("the reversed inequality 1 - 4p(1-p) >= 4p2(1-p2) also circulates as "
                       "the side condition; the convexity argument needs a^2 + a2^2 <= 1, "
                       "which is the form checked here")
V_K_NOTE = ("V_k = e * a^2 * a2^2 * S_{k-2}, the form that makes T_k - V_k match the "
            "difference expansion; the variant with a2^2 * a2 in place of a^2 * a2^2 does not")


class ParameterError(ValueError):
    """A parameter lies outside its range."""


class InadmissibleError(ValueError):
    """Parameters violate the ordering constraints of the closed form."""

    def __init__(self, reasons: List[str]):
        super().__init__("inadmissible parameters: " + "; ".join(reasons))
        self.reasons = list(reasons)


@dataclass(frozen=True)
class BecBscParams:
    e: float
    p2: float
    p: float

    def __post_init__(self):
        if not (0.0 <= self.e <= 1.0):
            raise ParameterError(f"e={self.e} outside [0, 1]")
        for name in ("p2", "p"):
            v = getattr(self, name)
            if not (0.0 <= v <= 0.5):
                raise ParameterError(f"{name}={v} outside [0, 0.5]")

    @property
    def a(self) -> float:
        return 1.0 - 2.0 * self.p

    @property
    def a2(self) -> float:
        return 1.0 - 2.0 * self.p2

    def channel(self) -> WiretapBc:
        """The three-channel model: Y1 = BEC(e), Y2 = BSC(p2), Z = BSC(p)."""
        return WiretapBc(make_bec(self.e), make_bsc(self.p2), make_bsc(self.p),
                         name=f"becbsc(e={self.e},p2={self.p2},p={self.p})")


@dataclass
class Admissibility:
    ok: bool
    reasons: List[str]
    form: str = SIDE_CONDITION_FORM
    note: str = SIDE_CONDITION_NOTE

    def __bool__(self) -> bool:
        return self.ok

    def to_dict(self) -> dict:
        return {"admissible": self.ok, "violations": self.reasons,
                "side_condition": self.form, "note": self.note}


def admissible(params: BecBscParams) -> Admissibility:
    """Check 2p2 <= e <= min{2p, 4p2(1-p2)} and a^2 + a2^2 <= 1."""
    e, p2, p = params.e, params.p2, params.p
    reasons = []
    if e < 2 * p2 - EDGE_TOL:
        reasons.append(f"e >= 2*p2 fails ({e:g} < {2 * p2:g})")
    if e > 2 * p + EDGE_TOL:
        reasons.append(f"e <= 2*p fails ({e:g} > {2 * p:g})")
    if e > 4 * p2 * (1 - p2) + EDGE_TOL:
        reasons.append(f"e <= 4*p2*(1-p2) fails ({e:g} > {4 * p2 * (1 - p2):g})")
    s = params.a ** 2 + params.a2 ** 2
    if s > 1 + EDGE_TOL:
        reasons.append(f"a^2 + a2^2 <= 1 fails ({s:g} > 1)")
    return Admissibility(not reasons, reasons)


@dataclass(frozen=True)
class CurvePoint:
    x: float
    r1: float
    r2: float


def x_grid(n_points: int) -> np.ndarray:
    if n_points < 2:
        raise ParameterError("n_points must be at least 2")
    return np.linspace(0.0, 0.5, n_points)


def _bconv(p: float, x: np.ndarray) -> np.ndarray:
    return p * (1 - x) + (1 - p) * x


def _clamp(name: str, v: np.ndarray) -> np.ndarray:
    if np.any(v < -NEG_TOL):
        raise ValueError(f"{name} is negative on the grid (min {v.min():.3g}); "
                         "the closed form should be nonnegative for these parameters")
    return np.clip(v, 0.0, None)


def secrecy_arrays(params: BecBscParams, n_points: int = 257, check: bool = True):
    """(x, r1, r2) arrays of the closed-form secrecy corner points."""
    if check:
        adm = admissible(params)
        if not adm:
            raise InadmissibleError(adm.reasons)
    x = x_grid(n_points)
    e, p2, p = params.e, params.p2, params.p
    hpx = binary_entropy_array(_bconv(p, x))
    r1 = (1 - e) * binary_entropy_array(x) + binary_entropy(p) - hpx
    r2 = hpx - binary_entropy_array(_bconv(p2, x))
    return x, _clamp("r1", r1), _clamp("r2", r2)


def secrecy_curve(params: BecBscParams, n_points: int = 257,
                  check: bool = True) -> List[CurvePoint]:
    x, r1, r2 = secrecy_arrays(params, n_points, check)
    return [CurvePoint(float(a), float(b), float(c)) for a, b, c in zip(x, r1, r2)]


def standard_arrays(e: float, p2: float, n_points: int = 257):
    BecBscParams(e, p2, 0.5)  # range checks
    x = x_grid(n_points)
    r1 = (1 - e) * binary_entropy_array(x)
    r2 = 1 - binary_entropy_array(_bconv(p2, x))
    return x, np.clip(r1, 0.0, None), np.clip(r2, 0.0, None)


def standard_curve(e: float, p2: float, n_points: int = 257) -> List[CurvePoint]:
    """Capacity region without an eavesdropper, as corner points over x."""
    x, r1, r2 = standard_arrays(e, p2, n_points)
    return [CurvePoint(float(a), float(b), float(c)) for a, b, c in zip(x, r1, r2)]


def curve_region(points: List[CurvePoint]) -> RateRegion:
    return RateRegion([(c.r1, c.r2) for c in points], keep_points=False)


def secrecy_region(params: BecBscParams, n_points: int = 257, check: bool = True) -> RateRegion:
    return curve_region(secrecy_curve(params, n_points, check))


@dataclass
class Figure7Block:
    p: float
    e: float
    admissibility: Admissibility
    secrecy: List[CurvePoint]
    standard: List[CurvePoint]

    @property
    def warning(self) -> str:
        if self.admissibility.ok:
            return ""
        return "outside the admissible set: " + "; ".join(self.admissibility.reasons)


def figure7_data(p2: float, p_min: float, p_max: float = 0.5, n_p: int = 41,
                 n_points: int = 257) -> List[Figure7Block]:
    """Secrecy and standard curves for e = 2p as p sweeps [p_min, p_max].

    Every p is emitted; blocks outside the admissible set carry a warning
    instead of being dropped, because for small p2 the admissible set along
    e = 2p can be empty.
    """
    if p_min < p2 - EDGE_TOL:
        raise ParameterError(f"p_min={p_min} must be at least p2={p2}")
    if p_max > 0.5 or p_max < p_min:
        raise ParameterError("need p_min <= p_max <= 0.5")
    if n_p < 1:
        raise ParameterError("n_p must be positive")
    blocks = []
    for p in np.linspace(p_min, p_max, n_p):
        p = float(p)
        e = min(2 * p, 1.0)
        params = BecBscParams(e, p2, p)
        blocks.append(Figure7Block(p, e, admissible(params),
                                   secrecy_curve(params, n_points, check=False),
                                   standard_curve(e, p2, n_points)))
    return blocks


# ---------------------------------------------------------------------------
# convexity


def _h1(x):
    return np.log2((1 - x) / x)


def _h2(x):
    return -1.0 / (x * (1 - x) * math.log(2))


@dataclass
class ConvexityReport:
    params: BecBscParams
    n_grid: int
    max_violation: float
    max_second_difference: float
    agree: bool
    min_f1_prime: float
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"e": self.params.e, "p2": self.params.p2, "p": self.params.p,
                "n_grid": self.n_grid, "max_violation": self.max_violation,
                "max_second_difference": self.max_second_difference,
                "methods_agree": self.agree, "min_f1_prime": self.min_f1_prime,
                "passed": self.passed, **self.details}


def convexity_derivatives(params: BecBscParams, x: np.ndarray) -> dict:
    """First and second derivatives of the two corner-point coordinates."""
    e, p2, p = params.e, params.p2, params.p
    a, a2 = params.a, params.a2
    px, p2x = _bconv(p, x), _bconv(p2, x)
    return {
        "f1p": (1 - e) * _h1(x) - a * _h1(px),
        "f1pp": (1 - e) * _h2(x) - a ** 2 * _h2(px),
        "f2p": a * _h1(px) - a2 * _h1(p2x),
        "f2pp": a ** 2 * _h2(px) - a2 ** 2 * _h2(p2x),
    }


def verify_convexity(params: BecBscParams, n_grid: int = 257) -> ConvexityReport:
    """Check that the corner-point curve bounds a convex set.

    The analytic test is ``f2'' f1' - f1'' f2' <= 1e-9`` on an interior x
    grid. The cross-check is the turning direction of consecutive chords of
    the sampled curve, normalised by the grid step squared, which must have
    the same sign as the determinant wherever the latter exceeds 1e-6 in
    magnitude (and be within 1e-6 of zero elsewhere).
    """
    if n_grid < 16:
        raise ParameterError("grid too coarse: need at least 16 points")
    if params.a ** 2 + params.a2 ** 2 > 1 + EDGE_TOL:
        raise InadmissibleError(["a^2 + a2^2 <= 1 fails"])
    x = 0.5 * np.arange(1, n_grid + 1) / (n_grid + 1)
    d = convexity_derivatives(params, x)
    det = d["f2pp"] * d["f1p"] - d["f1pp"] * d["f2p"]
    e, p2, p = params.e, params.p2, params.p
    h = x[1] - x[0]
    f1 = (1 - e) * binary_entropy_array(x) + binary_entropy(p) - binary_entropy_array(_bconv(p, x))
    f2 = binary_entropy_array(_bconv(p, x)) - binary_entropy_array(_bconv(p2, x))
    d1, d2 = np.diff(f1), np.diff(f2)
    cross = (d1[:-1] * d2[1:] - d2[:-1] * d1[1:]) / h ** 2
    max_det = float(det.max())
    max_cross = float(cross.max())
    # Each chord turn estimates the determinant at the middle grid point.
    mid = det[1:-1]
    significant = np.abs(mid) > SIGN_FLOOR
    agree = bool(np.all(np.sign(cross[significant]) == np.sign(mid[significant]))
                 and np.all(np.abs(cross[~significant]) <= SIGN_FLOOR))
    passed = bool(max_det <= CONVEXITY_TOL and agree)
    return ConvexityReport(params, n_grid, max(max_det, 0.0), max_cross, agree,
                           float(d["f1p"].min()), passed,
                           {"sign_floor": SIGN_FLOOR, "note": SIDE_CONDITION_NOTE})


# ---------------------------------------------------------------------------
# series


@dataclass(frozen=True)
class SeriesTerms:
    k: int
    s_k: float
    t_k: float
    v_k: float
    s_ratio: float
    s_sum: float


def _check_series_args(a: float, a2: float, e: float) -> None:
    if not (0.0 <= a <= a2 + EDGE_TOL and a2 <= 1.0 + EDGE_TOL):
        raise ParameterError(f"need 0 <= a <= a2 <= 1, got a={a}, a2={a2}")
    if not (0.0 <= e <= 1.0):
        raise ParameterError(f"e={e} outside [0, 1]")


def s_sum_form(a: float, a2: float, k: int) -> float:
    if k == 1:
        return 0.0
    s = (k - 1) // 2
    return float(sum(a2 ** (2 * j) * a ** (2 * (s - 1 - j)) for j in range(s)))


def s_ratio_form(a: float, a2: float, k: int) -> float:
    """Closed ratio form; falls back to the sum form when a = a2."""
    if abs(a2 * a2 - a * a) < 1e-12:
        return s_sum_form(a, a2, k)
    return (a2 ** (k - 1) - a ** (k - 1)) / (a2 ** 2 - a ** 2)


def s_recursive(a: float, a2: float, k: int) -> float:
    """S_k from S_1 = 0 via S_k = a^(k-3) + a2^2 S_(k-2)."""
    if k < 1 or k % 2 == 0:
        raise ParameterError(f"k must be odd and positive, got {k}")
    s = 0.0
    for m in range(3, k + 1, 2):
        s = a ** (m - 3) + a2 ** 2 * s
    return s


def series_terms(a: float, a2: float, e: float, k: int) -> SeriesTerms:
    if k < 3 or k % 2 == 0:
        raise ParameterError(f"k must be odd and at least 3, got {k}")
    _check_series_args(a, a2, e)
    s_k = s_recursive(a, a2, k)
    t_k = (1 - e) * (1 - s_recursive(a, a2, k + 2)) + a * a * a2 * a2 * s_k
    v_k = e * a * a * a2 * a2 * s_recursive(a, a2, k - 2)
    return SeriesTerms(k, s_k, t_k, v_k, s_ratio_form(a, a2, k), s_sum_form(a, a2, k))


def claim3_partial_sum(k_max: int) -> float:
    """Direct partial sum of 2/(k-2) - 1/k - 1/(k-4) over odd k in [5, k_max]."""
    return float(sum(1 / (k - 2) - 1 / k - 1 / (k - 4) + 1 / (k - 2)
                     for k in range(5, k_max + 1, 2)))


def claim3_telescoped(k_max: int) -> float:
    return -2.0 / 3.0 - 1.0 / k_max + 1.0 / (k_max - 2)


@dataclass
class SeriesReport:
    a: float
    a2: float
    e: float
    k_max: int
    claim1: bool
    claim2: bool
    claim3: bool
    terms: List[SeriesTerms]
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.claim1 and self.claim2 and self.claim3

    def to_dict(self) -> dict:
        return {"a": self.a, "a2": self.a2, "e": self.e, "k_max": self.k_max,
                "claim1_T_ge_V_ge_0": self.claim1, "claim2_V_nonincreasing": self.claim2,
                "claim3_partial_sums": self.claim3, "all_claims_pass": self.passed,
                "note": V_K_NOTE, **self.details}


def verify_series(a: float, a2: float, e: float, k_max: int = 41) -> SeriesReport:
    if k_max < 7 or k_max % 2 == 0:
        raise ParameterError(f"k_max must be odd and at least 7, got {k_max}")
    _check_series_args(a, a2, e)
    terms = [series_terms(a, a2, e, k) for k in range(3, k_max + 1, 2)]
    tol = 1e-12
    c1_gaps = [t.t_k - t.v_k for t in terms]
    claim1 = all(g >= -tol for g in c1_gaps) and all(t.v_k >= -tol for t in terms)
    vs = [t.v_k for t in terms if t.k >= 5]
    incr = [vs[i + 1] - vs[i] for i in range(len(vs) - 1)]
    claim2 = all(d <= tol for d in incr)
    sums = [(k, claim3_partial_sum(k), claim3_telescoped(k)) for k in range(5, k_max + 1, 2)]
    c3_err = max(abs(s - t) for _, s, t in sums)
    claim3 = c3_err <= 1e-9
    details = {
        "min_T_minus_V": float(min(c1_gaps)),
        "max_V_increase": float(max(incr)) if incr else 0.0,
        "claim3_max_error": c3_err,
        "claim3_final_partial_sum": sums[-1][1],
        "claim3_limit": -2.0 / 3.0,
        "a2_plus_a22": a * a + a2 * a2,
    }
    return SeriesReport(a, a2, e, k_max, claim1, claim2, claim3, terms, details)
