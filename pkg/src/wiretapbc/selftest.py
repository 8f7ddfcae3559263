"""Fast invariant checks run by ``wiretapbc selftest``."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from . import becbsc, ordering
from .probcore import (JointPmf, binary_entropy, cascade, ck_identity_check, conditional_mi,
                       entropy, make_bsc, random_channel, random_pmf)


@dataclass
class CheckResult:
    name: str
    passed: bool
    message: str
    seconds: float


def _close(a: float, b: float, tol: float, what: str) -> None:
    if not abs(a - b) <= tol:
        raise AssertionError(f"{what}: got {a!r}, expected {b!r} (tol {tol:g})")


def check_entropy_conventions() -> None:
    _close(binary_entropy(0.0), 0.0, 0.0, "h2(0)")
    _close(binary_entropy(1.0), 0.0, 0.0, "h2(1)")
    _close(binary_entropy(0.5), 1.0, 1e-15, "h2(1/2)")
    _close(entropy([0.25] * 4), 2.0, 1e-12, "H(uniform on 4)")
    _close(entropy([1.0, 0.0, 0.0]), 0.0, 0.0, "H(point mass)")


def check_chain_rule() -> None:
    rng = np.random.default_rng(11)
    for _ in range(20):
        j = JointPmf(("A", "B", "C"), random_pmf(rng, 24).reshape(2, 3, 4))
        lhs = conditional_mi(j, "A", ("B", "C"))
        rhs = conditional_mi(j, "A", "B") + conditional_mi(j, "A", "C", "B")
        _close(lhs, rhs, 1e-10, "chain rule I(A;BC) = I(A;B) + I(A;C|B)")
        if conditional_mi(j, "A", "B", "C") < -1e-12:
            raise AssertionError("conditional mutual information is negative")


def check_ck_identity() -> None:
    rng = np.random.default_rng(12)
    for k in range(20):
        n = 2 + k % 2
        shape = (2,) + (2,) * (2 * n)
        j = JointPmf(tuple(f"X{i}" for i in range(1, n + 1)) +
                     tuple(f"Y{i}" for i in range(1, n + 1)) + ("C",),
                     random_pmf(rng, int(np.prod(shape))).reshape(shape))
        d = ck_identity_check(j, n)
        if d > 1e-10:
            raise AssertionError(f"sum identity defect {d:.3g} on joint {k}")


def check_becbsc_endpoints() -> None:
    prm = becbsc.BecBscParams(0.2, 0.1, 0.25)
    pts = becbsc.secrecy_curve(prm)
    _close(pts[0].r1, 0.0, 1e-12, "r1 at x=0")
    _close(pts[0].r2, binary_entropy(0.25) - binary_entropy(0.1), 1e-12, "r2 at x=0")
    _close(pts[-1].r1, binary_entropy(0.25) - 0.2, 1e-12, "r1 at x=1/2")
    _close(pts[-1].r2, 0.0, 1e-12, "r2 at x=1/2")


def check_ordering_hierarchy() -> None:
    rep = ordering.check_degraded(make_bsc(0.1), make_bsc(0.25))
    if rep.holds != ordering.PROVED:
        raise AssertionError("BSC(0.25) not recognised as degraded from BSC(0.1)")
    rng = np.random.default_rng(13)
    for k in range(10):
        w = random_channel(rng, 2, 3)
        v = cascade(w, random_channel(rng, 3, 2))
        reps = ordering.check_all(w, v, seed=k, samples=200, grid=32)
        for name, r in reps.items():
            if r.refuted:
                raise AssertionError(f"cascade {k}: {name} refuted for a degraded pair")
        if reps["degraded"].holds != ordering.PROVED:
            raise AssertionError(f"cascade {k}: degradedness not proved")


CHECKS: List[Callable[[], None]] = [
    check_entropy_conventions,
    check_chain_rule,
    check_ck_identity,
    check_becbsc_endpoints,
    check_ordering_hierarchy,
]


def run_selftest() -> List[CheckResult]:
    out = []
    for fn in CHECKS:
        t0 = time.perf_counter()
        try:
            fn()
            ok, msg = True, "ok"
        except Exception as exc:  # report every failure, keep going
            ok, msg = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(fn.__name__, ok, msg, time.perf_counter() - t0))
    return out


def all_passed(results: List[CheckResult]) -> bool:
    return all(r.passed for r in results)
